#include <stdio.h>
#include "mcaas.h"
int main(void) {
    McaasOption o = {100.0, 100.0, 0.05, 0.2, 1.0, 0};
    double bs; McaasEstimate e;
    if (mcaas_price_bs(&o, &bs) != MCAAS_STATUS_OK) return 1;
    if (mcaas_price_mc(&o, 100000, 1, &e) != MCAAS_STATUS_OK) return 2;
    McaasNode *node; McaasAccelClient *c;
    if (mcaas_node_start("127.0.0.1:0", 7, 0.0, &node) != MCAAS_STATUS_OK) return 3;
    char ep[64]; snprintf(ep, sizeof ep, "127.0.0.1:%u", mcaas_node_port(node));
    if (mcaas_accel_client_new(ep, 1000, 7, &c) != MCAAS_STATUS_OK) return 4;
    McaasWireOption w = {o, 10000, 3}; McaasLaneResult r;
    if (mcaas_accel_client_price(c, &w, 1, &r) != MCAAS_STATUS_OK) return 5;
    printf("v%s bs=%.6f mc=%.6f+-%.4f node=%.6f status=%u\n", mcaas_version(), bs, e.price, e.std_error, r.price, r.status);
    mcaas_accel_client_free(c); mcaas_node_stop(node);
    return 0;
}
