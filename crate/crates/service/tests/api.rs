use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use pvtrade_service::{router, ServiceState};

fn app() -> Router {
    router(ServiceState::default(), None)
}

async fn send(app: Router, req: Request<Body>) -> (StatusCode, Vec<u8>, Option<String>) {
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let ctype = resp.headers().get(header::CONTENT_TYPE).map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes, ctype)
}

async fn post(body: Value) -> (StatusCode, Value) {
    let req = Request::post("/v1/evaluate")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (s, b, _) = send(app(), req).await;
    (s, serde_json::from_slice(&b).unwrap())
}

async fn get(uri: &str) -> (StatusCode, Vec<u8>, Option<String>) {
    send(app(), Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn get_json(uri: &str) -> (StatusCode, Value) {
    let (s, b, _) = get(uri).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn regime<'a>(resp: &'a Value, name: &str) -> &'a Value {
    resp["results"].as_array().unwrap().iter().find(|r| r["regime"] == name).unwrap()
}

fn num(v: &Value) -> f64 {
    v["value"].as_f64().unwrap()
}

#[tokio::test]
async fn flat_solar_and_cheap_pv_gives_full_coverage() {
    let (s, r) = post(json!({"w": 0, "ratio": 0.9, "k": 0.5})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(num(&regime(&r, "autarky")["beta_star"]), 1.0);
    assert_eq!(regime(&r, "autarky")["beta_star"]["unit"], "1");
}

#[tokio::test]
async fn threshold_ratio_returns_excess_coverage() {
    let (s, r) = post(json!({"w": 10, "k": 0.5, "ratio": 7.0 / 22.0})).await;
    assert_eq!(s, StatusCode::OK);
    let e = num(&r["excess_threshold"]);
    assert!((e - 12.0 / 22.0).abs() < 1e-15);
    // oracle: the model's own optimizer
    let bb = pvtrade_core::BaseloadBackupCost::from_unit_total(100.0, 0.5).unwrap();
    let beta = pvtrade_core::model::optimal_beta(10.0, &bb, 7.0 / 22.0 * bb.total_per_mwh()).unwrap();
    assert_eq!(num(&regime(&r, "autarky")["beta_star"]), beta);
    assert!((beta - e).abs() < 1e-9);
}

#[tokio::test]
async fn central_inputs_global_cost() {
    let (s, r) = post(json!({"latitude": 0, "regimes": ["global"]})).await;
    assert_eq!(s, StatusCode::OK);
    let c = regime(&r, "global");
    assert!((num(&c["unit_cost"]) - 21.47).abs() < 0.05);
    assert_eq!(c["unit_cost"]["unit"], "USD/MWh");
}

#[tokio::test]
async fn presets_example_evaluates_to_reference_global_cost() {
    let (s, p) = get_json("/v1/presets").await;
    assert_eq!(s, StatusCode::OK);
    let names: Vec<_> = p["presets"].as_array().unwrap().iter().map(|x| x["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["high", "low", "median"]);
    let ex = p["examples"].as_array().unwrap().iter().find(|x| x["name"] == "central / global").unwrap();
    let (s, r) = post(ex["request"].clone()).await;
    assert_eq!(s, StatusCode::OK);
    assert!((num(&regime(&r, "global")["unit_cost"]) - 21.47).abs() < 0.005);
}

#[tokio::test]
async fn error_statuses() {
    let conflicts = [
        json!({"w": 1, "latitude": 10}),
        json!({"latitude": 10, "k": 0.5, "preset": "high"}),
        json!({"latitude": 10, "baseload_total": 90}),
        json!({"latitude": 10, "ratio": 0.5}),
        json!({"w": 1, "ratio": 0.5, "regimes": ["global"]}),
        json!({"latitude": 10, "transmission_cost": 5, "transmission": serde_json::from_str::<Value>(include_str!("../../../data/transmission/future.json")).unwrap()}),
    ];
    for body in conflicts {
        let (s, r) = post(body.clone()).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
        assert!(r["errors"][0]["message"].as_str().unwrap().len() > 3);
    }
    let bad = [
        (json!({}), "w"),
        (json!({"w": -1, "ratio": 0.5}), "w"),
        (json!({"w": 1, "ratio": 0.5, "k": 1.2}), "k"),
        (json!({"w": 1}), "site.yield_ep"),
        (json!({"latitude": 70}), "latitude"),
        (json!({"latitude": 10, "preset": "nope"}), "preset"),
        (json!({"latitude": 10, "colour": "red"}), "body"),
        (json!({"latitude": 10, "pv": {"discount_rate": -0.5}}), "discount_rate"),
    ];
    for (body, field) in bad {
        let (s, r) = post(body.clone()).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(r["errors"][0]["field"], field, "{body}");
    }
    let req = Request::post("/v1/evaluate").body(Body::from("{not json")).unwrap();
    assert_eq!(send(app(), req).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn transmission_breakdown_and_gains() {
    let spec: Value = serde_json::from_str(include_str!("../../../data/transmission/suncable.json")).unwrap();
    let (s, r) = post(json!({"latitude": 45, "transmission": spec})).await;
    assert_eq!(s, StatusCode::OK);
    let tc = num(&r["transmission"]["unit_cost"]);
    assert!((tc - 19.75).abs() < 0.1);
    let ns = regime(&r, "north_south");
    assert!((num(&ns["wtp"]) - tc - num(&ns["gains"])).abs() < 1e-9);
}

#[tokio::test]
async fn surface_plateaus_cliffs_and_pointwise_agreement() {
    let (s, low) = get_json("/v1/surface?w=0.5&k_steps=11&ratio_steps=50").await;
    assert_eq!(s, StatusCode::OK);
    let (_, high) = get_json("/v1/surface?w=10&k_steps=11&ratio_steps=50").await;
    let beta = |v: &Value, i: usize, j: usize| v["beta"][i][j].as_f64().unwrap();
    let e_low = num(&low["excess_threshold"]);
    let e_high = num(&high["excess_threshold"]);
    assert!(e_low > e_high);

    // Each row jumps from 0 to at least e at the cliff.
    let ratios: Vec<f64> = low["ratio"]["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let ks: Vec<f64> = low["k"]["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (surf, e) in [(&low, e_low), (&high, e_high)] {
        for i in 0..ks.len() {
            let cliff = surf["cliff_ratio"]["values"][i].as_f64().unwrap();
            for (j, &r) in ratios.iter().enumerate() {
                let b = beta(surf, i, j);
                if r > cliff * (1.0 + 1e-9) {
                    assert_eq!(b, 0.0, "k {} ratio {r}", ks[i]);
                } else {
                    assert!(b >= e - 1e-12, "k {} ratio {r}", ks[i]);
                }
            }
        }
    }
    // Where both have PV, the plateau at w = 0.5 sits higher.
    let mut compared = 0;
    for i in 0..ks.len() {
        for j in 0..ratios.len() {
            let (a, b) = (beta(&low, i, j), beta(&high, i, j));
            if a > 0.0 && b > 0.0 {
                assert!(a >= b);
                compared += 1;
            }
        }
    }
    assert!(compared > 0);

    for (i, j) in [(0, 0), (3, 7), (5, 20), (10, 49), (7, 33)] {
        let (_, r) = post(json!({"w": 0.5, "k": ks[i], "ratio": ratios[j], "regimes": ["autarky"]})).await;
        assert_eq!(num(&r["results"][0]["beta_star"]), beta(&low, i, j), "k {} ratio {}", ks[i], ratios[j]);
    }
}

#[tokio::test]
async fn surface_limits() {
    assert_eq!(get_json("/v1/surface?w=1&k_steps=501").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get_json("/v1/surface?w=1&ratio_steps=1000").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get_json("/v1/surface?k_steps=5").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get_json("/v1/surface?w=1&foo=2").await.0, StatusCode::BAD_REQUEST);
    let (s, r) = get_json("/v1/surface?w=1&k_steps=1&ratio_steps=1").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(r["beta"].as_array().unwrap().len(), 1);
}

fn values(v: &Value) -> Vec<f64> {
    v["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn curve<'a>(sweep: &'a Value, name: &str) -> &'a Value {
    sweep["curves"].as_array().unwrap().iter().find(|c| c["regime"] == name).unwrap()
}

#[tokio::test]
async fn sweep_ceilings() {
    let (s, high) = get_json("/v1/latitude-sweep?scenario=high").await;
    assert_eq!(s, StatusCode::OK);
    let lats = values(&high["latitude"]);
    assert_eq!(lats.len(), 111);
    assert_eq!((lats[0], lats[110]), (-55.0, 55.0));
    let aut = values(&curve(&high, "autarky")["unit_cost"]);
    let plateau = aut.iter().cloned().fold(f64::MIN, f64::max);
    assert!((112.0 - 2.0..=115.0 + 2.0).contains(&plateau), "{plateau}");

    let (_, median) = get_json("/v1/latitude-sweep?scenario=median").await;
    let plateau = values(&curve(&median, "autarky")["unit_cost"]).into_iter().fold(f64::MIN, f64::max);
    assert!((85.0 - 2.0..=86.0 + 2.0).contains(&plateau), "{plateau}");
}

#[tokio::test]
async fn sweep_low_cost_collapses_and_global_is_flat() {
    let (_, low) = get_json("/v1/latitude-sweep?scenario=low").await;
    for c in low["curves"].as_array().unwrap() {
        if c["regime"] != "global" {
            assert!(values(&c["beta_star"]).iter().all(|&b| b == 0.0), "{}", c["regime"]);
            let cost = values(&c["unit_cost"]);
            assert!(cost.iter().all(|&x| x == cost[0] && x < 60.0 && x > 58.0));
        }
    }
    let (_, high) = get_json("/v1/latitude-sweep").await;
    let g = values(&curve(&high, "global")["unit_cost"]);
    assert!(g.iter().all(|&x| x == g[0]));
    let ns_wtp = values(&curve(&high, "north_south")["wtp"]);
    assert!(ns_wtp.iter().all(|&x| x >= 0.0));
}

#[tokio::test]
async fn sweep_csv_and_errors() {
    let (s, body, ctype) = get("/v1/latitude-sweep?scenario=median&lat_min=0&lat_max=10&format=csv").await;
    assert_eq!(s, StatusCode::OK);
    assert!(ctype.unwrap().starts_with("text/csv"));
    let text = String::from_utf8(body).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lat,autarky_beta,autarky_unit_cost,north_south_beta,north_south_unit_cost,north_south_wtp,\
         east_west_beta,east_west_unit_cost,east_west_wtp,global_beta,global_unit_cost,global_wtp"
    );
    assert_eq!(lines.count(), 11);

    // csv and json carry the same numbers at six significant digits
    let (_, j) = get_json("/v1/latitude-sweep?scenario=median&lat_min=0&lat_max=10").await;
    let aut = values(&curve(&j, "autarky")["unit_cost"]);
    let second: Vec<&str> = text.lines().nth(3).unwrap().split(',').collect();
    assert_eq!(second[0].parse::<f64>().unwrap(), 2.0);
    let csv_cost: f64 = second[2].parse().unwrap();
    assert!((csv_cost - aut[2]).abs() <= aut[2].abs() * 1e-5);

    let (_, inline) = get_json("/v1/latitude-sweep?fixed_annual=779000&variable_unit=23.3&lat_min=0&lat_max=0").await;
    assert_eq!(inline["scenario"], "inline");

    for uri in [
        "/v1/latitude-sweep?scenario=extreme",
        "/v1/latitude-sweep?lat_max=60",
        "/v1/latitude-sweep?lat_step=0.01",
        "/v1/latitude-sweep?format=xml",
        "/v1/latitude-sweep?fixed_annual=1000",
    ] {
        assert_eq!(get(uri).await.0, StatusCode::BAD_REQUEST, "{uri}");
    }
    let (s, r) = get_json("/v1/latitude-sweep?scenario=extreme").await;
    assert_eq!((s, r["errors"][0]["field"].as_str()), (StatusCode::BAD_REQUEST, Some("scenario")));
    assert_eq!(get("/v1/latitude-sweep?scenario=high&fixed_annual=1&variable_unit=1").await.0, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn concurrent_identical_requests_agree() {
    let app = app();
    let body = json!({"latitude": 33.3, "k": 0.4, "baseload_total": 95}).to_string();
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let app = app.clone();
            let body = body.clone();
            tokio::spawn(async move {
                let req = Request::post("/v1/evaluate").body(Body::from(body)).unwrap();
                send(app, req).await.1
            })
        })
        .collect();
    let mut out = Vec::new();
    for t in tasks {
        out.push(t.await.unwrap());
    }
    assert!(out.iter().all(|b| b == &out[0]));
    // and a later identical request still matches
    let req = Request::post("/v1/evaluate").body(Body::from(body)).unwrap();
    assert_eq!(send(app, req).await.1, out[0]);
}

#[tokio::test]
async fn health_and_cors() {
    let req = Request::get("/v1/health").header(header::ORIGIN, "http://example.org").body(Body::empty()).unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");
}

#[tokio::test]
async fn static_fallback_serves_files() {
    let dir = std::env::temp_dir().join(format!("pvtrade-static-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("index.html"), "<p>ui</p>").unwrap();
    let app = router(ServiceState::default(), Some(&dir));
    let (s, b, _) = send(app, Request::get("/index.html").body(Body::empty()).unwrap()).await;
    assert_eq!((s, b.as_slice()), (StatusCode::OK, b"<p>ui</p>".as_slice()));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn presets_file_extends_builtins() {
    let p = pvtrade_service::parse_presets(r#"{"cheap": {"fixed_annual": 100000, "variable_unit": 10}, "alias": "median"}"#).unwrap();
    assert_eq!(p.len(), 5);
    assert_eq!(p["alias"], pvtrade_core::presets::CostPreset::Median.baseload());
    assert!(pvtrade_service::parse_presets(r#"{"bad": {"fixed_annual": -1, "variable_unit": 10}}"#).is_err());
}
