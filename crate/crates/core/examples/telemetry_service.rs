//! Starts the HTTP/websocket service on a local port, submits a command
//! over HTTP and follows the event stream until the pick completes.

use std::time::Duration;

use agrobot::service::{Service, ServiceConfig};
use agrobot::simulator::DEMO_SCENARIO;
use futures::StreamExt;
use serde_json::Value;
use tokio::io::{AsyncReadExt, AsyncWriteExt};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ServiceConfig {
        time_scale: 10.0,
        ..ServiceConfig::default()
    };
    let service = Service::start(config, Some(DEMO_SCENARIO))?;
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let addr = listener.local_addr()?;
    tokio::spawn(service.serve(listener));
    println!("serving on http://{addr}");

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/api/v1/stream?topics=events,scene")).await?;

    let body = r#"{"text":"pick the orange"}"#;
    let mut http = tokio::net::TcpStream::connect(addr).await?;
    http.write_all(
        format!(
            "POST /api/v1/command HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )
        .as_bytes(),
    )
    .await?;
    let mut response = String::new();
    http.read_to_string(&mut response).await?;
    println!("{}", response.lines().next().unwrap_or_default());

    let follow = async {
        while let Some(msg) = ws.next().await {
            let frame: Value = serde_json::from_str(msg?.to_text()?)?;
            let payload = &frame["payload"];
            match frame["topic"].as_str() {
                Some("events") => {
                    println!("[{} #{}] {}", frame["stamp"], frame["seq"], payload["kind"]);
                    if payload["kind"] == "PickCompleted" {
                        break;
                    }
                }
                _ => println!("[{} scene #{}] held {}", frame["stamp"], frame["seq"], payload["held"]),
            }
        }
        Ok::<_, Box<dyn std::error::Error>>(())
    };
    tokio::time::timeout(Duration::from_secs(30), follow).await??;
    Ok(())
}
