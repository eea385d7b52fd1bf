#ifndef MCAAS_H
#define MCAAS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>



typedef enum McaasStatus {
  MCAAS_STATUS_OK = 0,
  MCAAS_STATUS_NULL_POINTER = 1,
  MCAAS_STATUS_INVALID_ARGUMENT = 2,
  MCAAS_STATUS_PROTOCOL_ERROR = 3,
  MCAAS_STATUS_IO_ERROR = 4,
  MCAAS_STATUS_TIMEOUT = 5,
  MCAAS_STATUS_REMOTE_ERROR = 6,
  MCAAS_STATUS_BUFFER_TOO_SMALL = 7,
  MCAAS_STATUS_PANIC = 8,
} McaasStatus;

/**
 * Blocking UDP client for an accelerator node.
 */
typedef struct McaasAccelClient McaasAccelClient;

/**
 * Accelerator node running on a background thread.
 */
typedef struct McaasNode McaasNode;

/**
 * Option contract. `kind`: 0 = call, 1 = put.
 */
typedef struct McaasOption {
  double spot;
  double strike;
  double rate;
  double volatility;
  double expiry;
  uint8_t kind;
} McaasOption;

typedef struct McaasEstimate {
  double price;
  double std_error;
  uint64_t paths_used;
} McaasEstimate;

/**
 * Option plus its simulation controls, as sent to the accelerator.
 */
typedef struct McaasWireOption {
  struct McaasOption option;
  uint32_t paths;
  uint64_t seed;
} McaasWireOption;

/**
 * Per-option accelerator result. `status`: 0 ok, 1 invalid option, 2 lane error.
 */
typedef struct McaasLaneResult {
  double price;
  double std_error;
  uint8_t status;
} McaasLaneResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `cap - 1` bytes). Returns the full message length.
 *
 * # Safety
 * `buf` must be NULL or point to `cap` writable bytes.
 */
size_t mcaas_last_error_message(char *buf, size_t cap);

/**
 * Monte-Carlo price of one option.
 *
 * # Safety
 * `option` and `out` must be valid pointers.
 */
enum McaasStatus mcaas_price_mc(const struct McaasOption *option,
                                uint64_t paths,
                                uint64_t seed,
                                struct McaasEstimate *out);

/**
 * Black-Scholes closed-form price of one option.
 *
 * # Safety
 * `option` and `out` must be valid pointers.
 */
enum McaasStatus mcaas_price_bs(const struct McaasOption *option, double *out);

/**
 * Encodes a PriceRequest frame into `buf`. `*written` receives the frame
 * length, also when the buffer is too small.
 *
 * # Safety
 * `options` must point to `count` items; `buf` to `cap` writable bytes.
 */
enum McaasStatus mcaas_encode_price_request(uint64_t request_id,
                                            const struct McaasWireOption *options,
                                            size_t count,
                                            uint8_t *buf,
                                            size_t cap,
                                            size_t *written);

/**
 * Encodes a Ping frame into `buf`.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes; `written` must be valid.
 */
enum McaasStatus mcaas_encode_ping(uint64_t request_id, uint8_t *buf, size_t cap, size_t *written);

/**
 * Decodes a PriceResponse frame. Writes up to `cap` results to `out` and the
 * result count to `*count`.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` to `cap` writable items;
 * `request_id` and `count` must be valid.
 */
enum McaasStatus mcaas_decode_price_response(const uint8_t *bytes,
                                             size_t len,
                                             uint64_t *request_id,
                                             struct McaasLaneResult *out,
                                             size_t cap,
                                             size_t *count);

/**
 * Opens a client for the node at `endpoint` ("host:port"). `lanes` bounds
 * the options per request; 0 means the default of 7.
 *
 * # Safety
 * `endpoint` must be a NUL-terminated string; `out` must be valid.
 */
enum McaasStatus mcaas_accel_client_new(const char *endpoint,
                                        uint32_t timeout_ms,
                                        uint32_t lanes,
                                        struct McaasAccelClient **out);

/**
 * # Safety
 * `client` must come from [`mcaas_accel_client_new`] and not be freed.
 */
enum McaasStatus mcaas_accel_client_ping(struct McaasAccelClient *client);

/**
 * Prices `count` options in one frame; `out` receives `count` results in
 * request order.
 *
 * # Safety
 * `client` must be live; `options` must point to `count` items and `out` to
 * `count` writable items.
 */
enum McaasStatus mcaas_accel_client_price(struct McaasAccelClient *client,
                                          const struct McaasWireOption *options,
                                          size_t count,
                                          struct McaasLaneResult *out);

/**
 * # Safety
 * `client` must be NULL or come from [`mcaas_accel_client_new`]; it must
 * not be used afterwards.
 */
void mcaas_accel_client_free(struct McaasAccelClient *client);

/**
 * Starts an accelerator node on a background thread. `bind` is
 * "host:port" (port 0 picks a free port); `rate` > 0 selects modeled
 * pacing at that many paths per second per lane.
 *
 * # Safety
 * `bind` must be a NUL-terminated string; `out` must be valid.
 */
enum McaasStatus mcaas_node_start(const char *bind,
                                  uint32_t lanes,
                                  double rate,
                                  struct McaasNode **out);

/**
 * Port the node is listening on, or 0 for a NULL handle.
 *
 * # Safety
 * `node` must be NULL or a live handle from [`mcaas_node_start`].
 */
uint16_t mcaas_node_port(const struct McaasNode *node);

/**
 * Stops the node and releases the handle.
 *
 * # Safety
 * `node` must be NULL or a live handle from [`mcaas_node_start`]; it must
 * not be used afterwards.
 */
void mcaas_node_stop(struct McaasNode *node);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mcaas_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCAAS_H */
