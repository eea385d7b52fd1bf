mod common;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use common::{batch, batch_json, gateway_of, native_node, remote_profile, start_gateway, start_node, FaultProxy, Faults};
use mcaas_core::gateway::{
    split, Backend, BackendError, BackendProfile, Gateway, Lifecycle, OptionResult, OptionStatus,
    Pool, PriceResult, PricingRequest, SubRequest,
};
use mcaas_core::pricing::{price_mc, OptionSpec, SimParams};
use proptest::prelude::*;

fn direct(options: &[OptionSpec], paths: u64, seed_base: u64) -> Vec<(u64, u64)> {
    options
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let e = price_mc(o, &SimParams::new(paths, seed_base + i as u64)).unwrap();
            (e.price.to_bits(), e.std_error.to_bits())
        })
        .collect()
}

fn bits(results: &[OptionResult]) -> Vec<(u64, u64)> {
    results
        .iter()
        .map(|r| {
            assert_eq!(r.status, OptionStatus::Ok);
            (r.price.to_bits(), r.std_error.to_bits())
        })
        .collect()
}

/// Fails every call.
struct Broken;

#[async_trait]
impl Backend for Broken {
    async fn price(&mut self, _: &SubRequest) -> Result<Vec<OptionResult>, BackendError> {
        Err(BackendError::Unavailable("injected".into()))
    }
}

/// Counts calls and answers with the sub-request offset as price.
struct Echo(Arc<AtomicUsize>);

#[async_trait]
impl Backend for Echo {
    async fn price(&mut self, sub: &SubRequest) -> Result<Vec<OptionResult>, BackendError> {
        self.0.fetch_add(1, Ordering::SeqCst);
        Ok((0..sub.len())
            .map(|i| OptionResult {
                price: (sub.offset + i) as f64,
                std_error: 0.0,
                status: OptionStatus::Ok,
            })
            .collect())
    }
}

fn pool_with(name: &str, size: usize, chunk: usize, make: impl Fn(usize) -> Box<dyn Backend> + Send + Sync + 'static) -> Arc<Pool> {
    let profile = BackendProfile {
        chunk_size: chunk,
        ..BackendProfile::local_cpu()
    };
    Arc::new(Pool::with_factory(name, profile, size, Arc::new(make)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn split_merge_is_bit_identical(n in 1usize..40, salt: u16, seed_base in 0u64..1_000_000) {
        let options = batch(n, u64::from(salt));
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        let expected = direct(&options, 300, seed_base);
        for chunk in [1, 3, 7, n] {
            let profile = BackendProfile { chunk_size: chunk, ..BackendProfile::local_cpu() };
            let pool = Pool::new("cpu", profile, 3);
            let subs = split(&PricingRequest::new(options.clone(), 300, seed_base), chunk);
            let got = rt.block_on(pool.dispatch(subs));
            prop_assert_eq!(bits(&got.results), expected.clone());
        }
    }
}

#[test]
fn split_covers_in_order() {
    let req = PricingRequest::new(batch(10, 0), 5, 100);
    let subs = split(&req, 3);
    assert_eq!(subs.iter().map(|s| s.len()).collect::<Vec<_>>(), [3, 3, 3, 1]);
    assert_eq!(subs.iter().map(|s| s.offset).collect::<Vec<_>>(), [0, 3, 6, 9]);
    assert_eq!(subs[2].seed(1), 107);
}

#[tokio::test]
async fn round_robin_assignment() {
    let calls = Arc::new(AtomicUsize::new(0));
    let c = calls.clone();
    let pool = pool_with("echo", 3, 2, move |_| Box::new(Echo(c.clone())));
    assert_eq!(pool.assign(4), [0, 1, 2, 0]);
    assert_eq!(pool.assign(2), [1, 2]);
    pool.restart();
    let got = pool.dispatch(split(&PricingRequest::new(batch(9, 0), 1, 0), 2)).await;
    let assigned: Vec<_> = got.subs.iter().map(|s| s.assigned).collect();
    assert_eq!(assigned, [0, 1, 2, 0, 1]);
    let served: Vec<_> = got.subs.iter().map(|s| s.served_by).collect();
    assert_eq!(served, [Some(0), Some(1), Some(2), Some(0), Some(1)]);
    let prices: Vec<f64> = got.results.iter().map(|r| r.price).collect();
    assert_eq!(prices, (0..9).map(f64::from).collect::<Vec<_>>());
    assert_eq!(calls.load(Ordering::SeqCst), 5);
}

#[tokio::test]
async fn failed_worker_is_retried_on_the_next() {
    let calls = Arc::new(AtomicUsize::new(0));
    let c = calls.clone();
    let pool = pool_with("mixed", 2, 2, move |i| {
        if i == 0 {
            Box::new(Broken) as Box<dyn Backend>
        } else {
            Box::new(Echo(c.clone()))
        }
    });
    let got = pool.dispatch(split(&PricingRequest::new(batch(4, 0), 1, 0), 2)).await;
    assert!(got.results.iter().all(|r| r.status == OptionStatus::Ok));
    assert_eq!(got.subs.iter().map(|s| s.served_by).collect::<Vec<_>>(), [Some(1), Some(1)]);
    assert_eq!(calls.load(Ordering::SeqCst), 2);
}

#[tokio::test]
async fn without_retry_the_options_fail_in_band() {
    let calls = Arc::new(AtomicUsize::new(0));
    let c = calls.clone();
    let profile = BackendProfile { chunk_size: 2, ..BackendProfile::local_cpu() };
    let pool = Pool::with_factory(
        "mixed",
        profile,
        2,
        Arc::new(move |i| {
            if i == 0 {
                Box::new(Broken) as Box<dyn Backend>
            } else {
                Box::new(Echo(c.clone()))
            }
        }),
    )
    .with_retry(false);
    let got = pool.dispatch(split(&PricingRequest::new(batch(4, 0), 1, 0), 2)).await;
    let statuses: Vec<_> = got.results.iter().map(|r| r.status).collect();
    assert_eq!(
        statuses,
        [OptionStatus::BackendError, OptionStatus::BackendError, OptionStatus::Ok, OptionStatus::Ok]
    );
}

#[tokio::test]
async fn all_workers_down_is_503() {
    let pools = BTreeMap::from([("dead".to_owned(), pool_with("dead", 2, 7, |_| Box::new(Broken)))]);
    let gw = start_gateway(Arc::new(Gateway::with_pools(pools, "dead".into()))).await;
    let resp = reqwest::Client::new()
        .post(format!("{}/v1/price", gw.url()))
        .json(&batch_json(&batch(3, 0), 10, 0, "dead"))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 503);
}

#[tokio::test]
async fn http_get_post_and_errors() {
    let gw_state = gateway_of(vec![("cpu", BackendProfile::local_cpu(), 2)]);
    let gw = start_gateway(gw_state.clone()).await;
    let http = reqwest::Client::new();

    let r: PriceResult = http
        .get(format!("{}/v1/price?spot=100&strike=100&rate=0.05&vol=0.2&expiry=1&paths=20000&seed=3", gw.url()))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let spec = OptionSpec::call(100.0, 100.0, 0.05, 0.2, 1.0);
    assert_eq!(bits(&r.results), direct(&[spec], 20_000, 3));
    assert!(r.timing.e2e_s >= r.timing.processing_s);

    let options = batch(12, 5);
    let r: PriceResult = http
        .post(format!("{}/v1/price", gw.url()))
        .json(&batch_json(&options, 2_000, 40, "cpu"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(bits(&r.results), direct(&options, 2_000, 40));

    // A bad field names its path.
    let mut body = batch_json(&options, 2_000, 40, "cpu");
    body["options"][4]["strike"] = serde_json::json!("high");
    let resp = http.post(format!("{}/v1/price", gw.url())).json(&body).send().await.unwrap();
    assert_eq!(resp.status(), 400);
    let err: serde_json::Value = resp.json().await.unwrap();
    assert_eq!(err["field"], "options[4].strike");

    let resp = http
        .get(format!("{}/v1/price?spot=100&strike=100&rate=0.05&vol=0.2", gw.url()))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 400);

    let resp = http
        .post(format!("{}/v1/price", gw.url()))
        .json(&batch_json(&options, 10, 0, "nope"))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), 400);

    // Semantically invalid options are reported per option, not as a 400.
    let mut body = batch_json(&options[..2], 100, 0, "cpu");
    body["options"][1]["spot"] = serde_json::json!(-1.0);
    let r: PriceResult = http.post(format!("{}/v1/price", gw.url())).json(&body).send().await.unwrap().json().await.unwrap();
    assert_eq!(r.results[0].status, OptionStatus::Ok);
    assert_eq!(r.results[1].status, OptionStatus::InvalidOption);

    let health: serde_json::Value = http.get(format!("{}/v1/healthz", gw.url())).send().await.unwrap().json().await.unwrap();
    assert!(health.to_string().contains("cpu"), "{health}");
    let metrics: serde_json::Value = http.get(format!("{}/v1/metrics", gw.url())).send().await.unwrap().json().await.unwrap();
    assert!(metrics.to_string().contains("cpu"), "{metrics}");
    assert!(gw_state.metrics().records().len() >= 3);
}

#[tokio::test]
async fn restart_makes_workers_cold_again() {
    let profile = BackendProfile {
        cold_penalty: 0.05,
        ..BackendProfile::modeled(0.0, 0.0)
    };
    let gw_state = gateway_of(vec![("m", profile, 2)]);
    let gw = start_gateway(gw_state.clone()).await;
    let http = reqwest::Client::new();
    let price = |body: serde_json::Value| {
        let http = http.clone();
        let url = format!("{}/v1/price", gw.url());
        async move { http.post(url).json(&body).send().await.unwrap().json::<PriceResult>().await.unwrap() }
    };
    let body = batch_json(&batch(1, 0), 100, 0, "m");
    assert!(price(body.clone()).await.cold);
    let warm = http.post(format!("{}/v1/workers/warm?backend=m", gw.url())).send().await.unwrap();
    assert!(warm.status().is_success());
    let pool = gw_state.pool(Some("m")).unwrap();
    for w in pool.workers().iter() {
        assert_eq!(w.state().await.lifecycle, Lifecycle::Warm);
    }
    assert!(!price(body.clone()).await.cold);
    assert!(!price(body.clone()).await.cold);
    let restart = http.post(format!("{}/v1/workers/restart?backend=m", gw.url())).send().await.unwrap();
    assert!(restart.status().is_success());
    for w in pool.workers().iter() {
        assert_eq!(w.state().await.lifecycle, Lifecycle::Uninitialized);
    }
    let r = price(body).await;
    assert!(r.cold);
    assert!(r.timing.processing_s >= 0.05);
}

async fn remote_run(faults: Faults) -> (PriceResult, Vec<(u64, u64)>, (u64, u64, u64, u64)) {
    let node = start_node(native_node()).await;
    let proxy = FaultProxy::start(node.addr, faults).await;
    let gw = gateway_of(vec![("accel", remote_profile(proxy.addr, 300), 4)]);
    let options = batch(30, 9);
    let request = PricingRequest::new(options.clone(), 3_000, 77);
    let r = gw.handle_price(None, request, Instant::now()).await.unwrap();
    (r, direct(&options, 3_000, 77), proxy.stats.get())
}

#[tokio::test]
async fn remote_accel_matches_direct_pricing() {
    let (r, expected, stats) = remote_run(Faults::default()).await;
    assert_eq!(bits(&r.results), expected);
    assert_eq!(stats.3, 0);
}

#[tokio::test]
async fn remote_accel_survives_duplicates() {
    let (r, expected, stats) = remote_run(Faults { duplicate: true, drop_every: None }).await;
    assert_eq!(bits(&r.results), expected);
    assert!(stats.2 > stats.0, "{stats:?}");
}

#[tokio::test]
async fn remote_accel_survives_drops() {
    let (r, expected, stats) = remote_run(Faults { duplicate: false, drop_every: Some(2) }).await;
    assert_eq!(bits(&r.results), expected);
    assert!(stats.3 > 0, "{stats:?}");
}

#[tokio::test]
async fn hot_single_option_is_one_datagram_each_way() {
    let node = start_node(native_node()).await;
    let proxy = FaultProxy::start(node.addr, Faults::default()).await;
    let gw = gateway_of(vec![("accel", remote_profile(proxy.addr, 1000), 1)]);
    let pool = gw.pool(None).unwrap();
    assert_eq!(pool.warm_all().await, 0);
    let before = proxy.stats.get();
    let r = gw
        .handle_price(None, PricingRequest::new(batch(1, 0), 1_000, 1), Instant::now())
        .await
        .unwrap();
    assert!(!r.cold);
    tokio::time::sleep(Duration::from_millis(50)).await;
    let after = proxy.stats.get();
    assert_eq!(after.1 - before.1, 1, "requests");
    assert_eq!(after.2 - before.2, 1, "responses");
}

#[tokio::test]
async fn unreachable_node_fails_the_request() {
    // Bound but silent socket: every exchange times out.
    let silent = tokio::net::UdpSocket::bind(common::loopback()).await.unwrap();
    let gw = gateway_of(vec![("accel", remote_profile(silent.local_addr().unwrap(), 50), 2)]);
    let err = gw
        .handle_price(None, PricingRequest::new(batch(3, 0), 100, 1), Instant::now())
        .await
        .unwrap_err();
    assert!(err.to_string().contains("no backend"), "{err}");
}
