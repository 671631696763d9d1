use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use t2br_cli::api::{router, Snapshot};
use t2br_core::pipeline::{run_pipeline, PipelineConfig};
use t2br_core::recipegen::{load_sequences, trend_matrix, TrendAxis};
use tempfile::TempDir;
use tower::ServiceExt;

const WORKED_QUERY: &str =
    "((\u{2018}sucrose\u{2019}). PREC.) AND ((\u{2018}solid state\u{2019}). METHOD) AND ((\u{2018}end-to-end\u{2019}). TYPE)";

fn artifacts() -> &'static Path {
    static RUN: OnceLock<TempDir> = OnceLock::new();
    RUN.get_or_init(|| {
        let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/golden");
        let mut cfg = PipelineConfig::load(&golden.join("pipeline.toml")).unwrap();
        let dir = TempDir::new().unwrap();
        cfg.out_dir = dir.path().to_path_buf();
        run_pipeline(&cfg).unwrap();
        dir
    })
    .path()
}

fn snapshot() -> Arc<Snapshot> {
    static SNAP: OnceLock<Arc<Snapshot>> = OnceLock::new();
    SNAP.get_or_init(|| Arc::new(Snapshot::load(artifacts()).unwrap())).clone()
}

fn app() -> Router {
    router(snapshot(), None)
}

struct Reply {
    status: StatusCode,
    raw: Vec<u8>,
    json: Value,
}

async fn send(app: Router, req: Request<Body>) -> Reply {
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    assert_eq!(resp.headers()[header::CONTENT_TYPE], "application/json");
    let raw = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    let json = serde_json::from_slice(&raw).unwrap();
    Reply { status, raw, json }
}

async fn get(app: Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post_json(app: Router, uri: &str, body: &Value) -> Reply {
    let req = Request::builder()
        .method(Method::POST)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    send(app, req).await
}

fn openapi() -> &'static Value {
    static DOC: OnceLock<Value> = OnceLock::new();
    DOC.get_or_init(|| {
        let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("openapi.json")).unwrap();
        serde_json::from_str(&text).unwrap()
    })
}

/// Validates `instance` against a component schema of the shipped OpenAPI file.
fn assert_conforms(component: &str, instance: &Value) {
    let schema = json!({
        "$ref": format!("#/components/schemas/{component}"),
        "components": openapi()["components"],
    });
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{component}: {errors:#?}");
}

/// Schema named by the OpenAPI document for a path, method and status.
fn documented_schema(path: &str, method: &str, status: u16) -> String {
    let mut resp = &openapi()["paths"][path][method]["responses"][status.to_string()];
    if let Some(r) = resp["$ref"].as_str() {
        let name = r.rsplit('/').next().unwrap();
        resp = &openapi()["components"]["responses"][name];
    }
    let r = resp["content"]["application/json"]["schema"]["$ref"].as_str();
    r.unwrap_or_else(|| panic!("{method} {path} {status} is not documented")).rsplit('/').next().unwrap().to_string()
}

/// True when every object in the raw body lists its keys in sorted order.
fn keys_sorted(raw: &[u8]) -> bool {
    let v: Value = serde_json::from_slice(raw).unwrap();
    serde_json::to_vec(&v).unwrap() == raw
}

#[tokio::test]
async fn worked_query_returns_one_recipe() {
    let r = post_json(app(), "/api/query", &json!({ "q": WORKED_QUERY })).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json["total"], 1);
    let hit = &r.json["results"][0];
    assert_eq!(hit["type"], "end-to-end");
    assert_eq!(hit["recipe"]["paper_doi"], "10.5555/t2br-gold.01");
    assert_eq!(hit["matched"]["PREC"], json!(["sucrose"]));
    assert_eq!(
        r.json["canonical"],
        "(('sucrose'). PREC) AND (('solid state'). METHOD) AND (('end-to-end'). TYPE)"
    );
    // The canonical form runs to the same result.
    let again = post_json(app(), "/api/query", &json!({ "q": r.json["canonical"] })).await;
    assert_eq!(again.json["results"], r.json["results"]);
}

#[tokio::test]
async fn unknown_recipe_is_404() {
    let r = get(app(), "/api/recipes/unknown-id").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json["code"], "not_found");
    assert_eq!(r.json["status"], 404);
    let r = get(app(), "/api/nowhere").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn malformed_query_is_400_with_offset() {
    let q = "(('sucrose'). PREC) AND (('x'). COLOR)";
    let r = post_json(app(), "/api/query", &json!({ "q": q })).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json["code"], "query_unknown_field");
    assert_eq!(r.json["offset"], q.find("COLOR").unwrap());

    let q = "(('sucrose'). PREC";
    let r = post_json(app(), "/api/query", &json!({ "q": q })).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert!(r.json["offset"].is_u64());

    let req = Request::post("/api/query").body(Body::from("not json")).unwrap();
    let r = send(app(), req).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json["code"], "invalid_body");
}

#[tokio::test]
async fn paging_slices_results_but_keeps_total() {
    let q = "(('cathode-synthesis' OR 'end-to-end' OR 'cell-assembly'). TYPE)";
    let all = post_json(app(), "/api/query", &json!({ "q": q })).await;
    let total = all.json["total"].as_u64().unwrap();
    assert_eq!(total, 24);
    let page = post_json(app(), "/api/query", &json!({ "q": q, "offset": 5, "limit": 3 })).await;
    assert_eq!(page.json["total"], total);
    let ids = |v: &Value| v["results"].as_array().unwrap().iter().map(|h| h["id"].clone()).collect::<Vec<_>>();
    assert_eq!(ids(&page.json), ids(&all.json)[5..8].to_vec());
}

#[tokio::test]
async fn trends_match_the_library() {
    let r = get(app(), "/api/trends?row=ATM&col=TEMP").await;
    assert_eq!(r.status, StatusCode::OK);
    let seqs = load_sequences(&artifacts().join("sequences.jsonl")).unwrap();
    let want = trend_matrix(&seqs, TrendAxis::for_category("ATM").unwrap(), TrendAxis::for_category("TEMP").unwrap())
        .unwrap();
    assert_eq!(r.json, serde_json::to_value(&want).unwrap());

    let r = get(app(), "/api/trends?row=ATM").await;
    assert_eq!((r.status, r.json["code"].as_str()), (StatusCode::BAD_REQUEST, Some("missing_parameter")));
    let r = get(app(), "/api/trends?row=ATM&col=COLOR").await;
    assert_eq!((r.status, r.json["code"].as_str()), (StatusCode::BAD_REQUEST, Some("unknown_category")));
}

#[tokio::test]
async fn fields_and_stats_describe_the_index() {
    let r = get(app(), "/api/fields").await;
    let fields = r.json["fields"].as_array().unwrap();
    let field = |name: &str| fields.iter().find(|f| f["field"] == name).unwrap();
    assert!(field("PREC")["values"].as_array().unwrap().contains(&json!("sucrose")));
    assert_eq!(field("METHOD")["key"], "METH");
    assert_eq!(field("METHOD")["values"], field("METH")["values"]);
    assert_eq!(field("TYPE")["values"], json!(["cathode-synthesis", "cell-assembly", "end-to-end"]));

    let r = get(app(), "/api/stats").await;
    assert_eq!(r.json["records"], 24);
    assert_eq!(r.json["papers_with_recipes"], 5);
    assert_eq!(r.json["by_type"]["end-to-end"], 5);
    assert_eq!(r.json["topics"], 3);
    assert!(r.json["artifacts"]["index.json"].is_string());
}

#[tokio::test]
async fn responses_follow_the_openapi_description() {
    let cases: Vec<(&str, &str, Reply)> = vec![
        ("/api/query", "post", post_json(app(), "/api/query", &json!({ "q": WORKED_QUERY })).await),
        ("/api/query", "post", post_json(app(), "/api/query", &json!({ "q": "((" })).await),
        ("/api/recipes/{id}", "get", get(app(), "/api/recipes/e2e-0001").await),
        ("/api/recipes/{id}", "get", get(app(), "/api/recipes/syn-0001").await),
        ("/api/recipes/{id}", "get", get(app(), "/api/recipes/nope").await),
        ("/api/trends", "get", get(app(), "/api/trends?row=ATM&col=TEMP").await),
        ("/api/trends", "get", get(app(), "/api/trends?row=PREC&col=AM").await),
        ("/api/trends", "get", get(app(), "/api/trends").await),
        ("/api/topics", "get", get(app(), "/api/topics").await),
        ("/api/fields", "get", get(app(), "/api/fields").await),
        ("/api/stats", "get", get(app(), "/api/stats").await),
    ];
    for (path, method, reply) in cases {
        let schema = documented_schema(path, method, reply.status.as_u16());
        assert_conforms(&schema, &reply.json);
        assert!(keys_sorted(&reply.raw), "{path}: keys not sorted");
    }
}

#[tokio::test]
async fn identical_requests_give_identical_bytes() {
    let body = json!({ "q": WORKED_QUERY });
    let (a, b) = tokio::join!(post_json(app(), "/api/query", &body), post_json(app(), "/api/query", &body));
    assert_eq!(a.raw, b.raw);
    let (a, b) = tokio::join!(get(app(), "/api/topics"), get(app(), "/api/topics"));
    assert_eq!(a.raw, b.raw);
}

#[tokio::test]
async fn bearer_token_is_enforced_when_set() {
    let app = router(snapshot(), Some("s3cret".into()));
    let r = get(app.clone(), "/api/stats").await;
    assert_eq!(r.status, StatusCode::UNAUTHORIZED);
    assert_eq!(r.json["code"], "unauthorized");
    let req = Request::get("/api/stats").header(header::AUTHORIZATION, "Bearer wrong").body(Body::empty()).unwrap();
    assert_eq!(send(app.clone(), req).await.status, StatusCode::UNAUTHORIZED);
    let req = Request::get("/api/stats").header(header::AUTHORIZATION, "Bearer s3cret").body(Body::empty()).unwrap();
    assert_eq!(send(app, req).await.status, StatusCode::OK);
}

#[tokio::test]
async fn topics_absent_is_404() {
    let index = t2br_core::queryengine::RecipeIndex::load(&artifacts().join("index.json")).unwrap();
    let app = router(Arc::new(Snapshot::new(index, None)), None);
    let r = get(app, "/api/topics").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}
