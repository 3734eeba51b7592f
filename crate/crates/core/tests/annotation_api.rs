use std::path::Path;
use std::sync::Arc;

use chrono::NaiveDate;
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use threatsent_core::annotation::{router, AnnotationService, SessionStore};
use threatsent_core::corpus::write_reviews;
use threatsent_core::{EmpStatus, Review, ReviewId, Source};

fn write_corpus(path: &Path, n: u64) {
    let reviews: Vec<Review> = (1..=n)
        .map(|i| Review {
            id: ReviewId(i),
            orig_sentiment: Some(0.37),
            date_of_review: NaiveDate::from_ymd_opt(2023, 2, 3).unwrap(),
            emp_status: EmpStatus::FormerEmployee,
            job_title: format!("Clerk {i}"),
            pros: format!("Friendly team {i}"),
            cons: "Long hours".into(),
            source: Source::Synthetic,
            extras: Default::default(),
        })
        .collect();
    write_reviews(&reviews, std::fs::File::create(path).unwrap()).unwrap();
}

async fn start(store: &Path) -> (String, tokio::task::JoinHandle<()>) {
    let service = AnnotationService::open(SessionStore::open(store).unwrap(), None).unwrap();
    let app = router(Arc::new(service));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let handle = tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (base, handle)
}

async fn score(client: &Client, base: &str, sid: &str, body: Value) -> (StatusCode, Value) {
    let r = client
        .post(format!("{base}/api/sessions/{sid}/scores"))
        .json(&body)
        .send()
        .await
        .unwrap();
    (r.status(), r.json().await.unwrap())
}

async fn next(client: &Client, base: &str, sid: &str) -> Value {
    client
        .get(format!("{base}/api/sessions/{sid}/next"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap()
}

#[tokio::test]
async fn full_session_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("sample.csv");
    write_corpus(&corpus, 4);
    let (base, server) = start(&dir.path().join("store")).await;
    let client = Client::new();

    let created: Value = client
        .post(format!("{base}/api/sessions"))
        .json(&json!({"corpus_path": corpus, "seed": 9}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(created["total"], 4);
    let sid = created["session_id"].as_str().unwrap().to_string();

    let item = next(&client, &base, &sid).await;
    let mut keys: Vec<&str> = item.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["cons", "emp_status", "job_title", "position", "pros", "review_id", "total"]);
    assert!(!item.to_string().contains("0.37"));
    assert_eq!(item["position"], 1);
    let first = item["review_id"].as_u64().unwrap();

    let wrong = if first == 1 { 2 } else { 1 };
    let (status, body) = score(&client, &base, &sid, json!({"review_id": wrong, "score": 0.5})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].is_string() && body["detail"].is_string());

    let (status, _) = score(&client, &base, &sid, json!({"review_id": first, "score": 1.3})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = score(&client, &base, &sid, json!({"review_id": first, "score": 0.5, "is_crossover": true})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, body) = score(&client, &base, &sid, json!({"review_id": "x"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "bad_request");

    let (status, record) = score(&client, &base, &sid, json!({"review_id": first, "score": 0.0, "note": "slip"})).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(record["revision"], false);
    assert_eq!(record["note"], "slip");

    let r = client.get(format!("{base}/api/sessions/{sid}/export")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::GONE);
    let partial = client
        .get(format!("{base}/api/sessions/{sid}/export?partial=true"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert_eq!(partial.lines().count(), 1);

    for _ in 0..3 {
        let item = next(&client, &base, &sid).await;
        let id = item["review_id"].as_u64().unwrap();
        let (status, _) = score(&client, &base, &sid, json!({"review_id": id, "score": 0.4, "is_crossover": true})).await;
        assert_eq!(status, StatusCode::CREATED);
    }
    assert_eq!(next(&client, &base, &sid).await, json!({"complete": true}));

    let (status, record) = score(&client, &base, &sid, json!({"review_id": first, "score": 0.85})).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(record["revision"], true);

    let progress: Value = client
        .get(format!("{base}/api/sessions/{sid}/progress"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(progress, json!({"scored": 4, "total": 4, "revisions": 1}));

    let export = client
        .get(format!("{base}/api/sessions/{sid}/export"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    let lines: Vec<Value> = export.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    let revised = lines.iter().find(|l| l["review_id"] == first).unwrap();
    assert_eq!(revised["score"], 0.85);

    // Restart on the same store: everything acknowledged is still there.
    server.abort();
    let (base, _server) = start(&dir.path().join("store")).await;
    let again = client
        .get(format!("{base}/api/sessions/{sid}/export"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert_eq!(again, export);
}

#[tokio::test]
async fn unknown_sessions_and_bad_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let (base, _server) = start(dir.path()).await;
    let client = Client::new();
    let r = client.get(format!("{base}/api/sessions/nope/progress")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    let r = client
        .post(format!("{base}/api/sessions"))
        .json(&json!({"corpus_path": dir.path().join("missing.csv"), "seed": 1}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let page = client.get(format!("{base}/")).send().await.unwrap();
    assert_eq!(page.status(), StatusCode::OK);
}
