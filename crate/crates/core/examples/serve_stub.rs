//! Runs the HTTP API on an ephemeral port with the mock encoder and stub
//! model, exercises each endpoint once, then exits.
//!
//! Pass `--forever` to keep serving.

use std::sync::Arc;
use std::time::Duration;

use patharchive::rag::StubLlm;
use patharchive::service::{serve, AppState, EngineConfig};
use patharchive::synth::synth_engine;
use serde_json::{json, Value};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (engine, _) = synth_engine(60, 4, 128)?;
    let llm = Arc::new(StubLlm::rule(|r| r.contains("Lung,")));
    let state = AppState::new(engine, Some(llm), EngineConfig::default())?;

    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let addr = listener.local_addr()?;
    println!("serving on http://{addr}");
    if std::env::args().any(|a| a == "--forever") {
        rt.block_on(serve(listener, state))?;
        return Ok(());
    }
    rt.spawn(serve(listener, state));

    let http = reqwest::blocking::Client::new();
    let url = |p: &str| format!("http://{addr}{p}");
    let show = |label: &str, r: reqwest::blocking::Response| -> Result<Value, Box<dyn std::error::Error>> {
        let status = r.status();
        let body: Value = r.json()?;
        let text = body.to_string();
        println!("{label} -> {status}: {}", &text[..text.len().min(160)]);
        Ok(body)
    };

    show("healthz", http.get(url("/healthz")).send()?)?;
    show("search", http.post(url("/v1/search")).json(&json!({"query": "squamous cell carcinoma lung", "k": 3})).send()?)?;
    show("empty search", http.post(url("/v1/search")).json(&json!({"query": "", "k": 3})).send()?)?;
    show("transform", http.post(url("/v1/transform")).json(&json!({"report_id": "S00001", "kind": "tumor_board"})).send()?)?;
    show("ihc", http.post(url("/v1/ihc")).json(&json!({"report_id": "S00002", "k": 3})).send()?)?;
    let job = show("cohort", http.post(url("/v1/cohorts")).json(&json!({"inclusion_criteria": "Primary lung carcinoma"})).send()?)?;
    let id = job["job_id"].as_str().unwrap_or_default().to_string();
    loop {
        let status: Value = http.get(url(&format!("/v1/cohorts/{id}"))).send()?.json()?;
        if status["state"] == "done" || status["state"] == "failed" {
            println!("cohort {id}: {} with {} decisions, stats {}", status["state"], status["decisions"].as_array().map_or(0, Vec::len), status["stats"]);
            break;
        }
        std::thread::sleep(Duration::from_millis(20));
    }
    Ok(())
}
