//! Minimal JSON-RPC client for fetching deployed account code from a node.

use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum RpcError {
    #[error("malformed address {0:?}: expected 0x followed by 40 hex digits")]
    BadAddress(String),
    #[error("network error talking to {url}: {source}")]
    Network {
        url: String,
        #[source]
        source: reqwest::Error,
    },
    #[error("node returned error {code}: {message}")]
    Node { code: i64, message: String },
    #[error("malformed node response: {0}")]
    BadResponse(String),
    #[error("account {0} has no code (externally owned account?)")]
    EmptyCode(String),
}

#[derive(Deserialize)]
struct RpcResponse {
    result: Option<String>,
    error: Option<RpcErrorBody>,
}

#[derive(Deserialize)]
struct RpcErrorBody {
    code: i64,
    message: String,
}

fn valid_address(addr: &str) -> bool {
    addr.len() == 42
        && addr.starts_with("0x")
        && addr[2..].chars().all(|c| c.is_ascii_hexdigit())
}

/// Fetch the runtime bytecode of `address` at the latest block via
/// `eth_getCode`. Empty code is reported as an error rather than silently
/// analyzed.
pub fn fetch_code(rpc_url: &str, address: &str) -> Result<String, RpcError> {
    if !valid_address(address) {
        return Err(RpcError::BadAddress(address.to_string()));
    }
    let body = json!({
        "jsonrpc": "2.0",
        "method": "eth_getCode",
        "params": [address, "latest"],
        "id": 1,
    });
    let client = reqwest::blocking::Client::new();
    let resp: RpcResponse = client
        .post(rpc_url)
        .json(&body)
        .send()
        .and_then(|r| r.error_for_status())
        .map_err(|source| RpcError::Network {
            url: rpc_url.to_string(),
            source,
        })?
        .json()
        .map_err(|e| RpcError::BadResponse(e.to_string()))?;
    if let Some(err) = resp.error {
        return Err(RpcError::Node {
            code: err.code,
            message: err.message,
        });
    }
    let code = resp
        .result
        .ok_or_else(|| RpcError::BadResponse("missing result field".into()))?;
    if code == "0x" || code.is_empty() {
        return Err(RpcError::EmptyCode(address.to_string()));
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    /// One-shot HTTP server answering a canned JSON body.
    fn serve_once(body: &'static str) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            if let Ok((mut stream, _)) = listener.accept() {
                let mut buf = [0u8; 4096];
                let _ = stream.read(&mut buf);
                let resp = format!(
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
                    body.len(),
                    body
                );
                let _ = stream.write_all(resp.as_bytes());
            }
        });
        format!("http://{}", addr)
    }

    const ADDR: &str = "0x1122334455667788990011223344556677889900";

    #[test]
    fn returns_code() {
        let url = serve_once(r#"{"jsonrpc":"2.0","id":1,"result":"0x6004"}"#);
        assert_eq!(fetch_code(&url, ADDR).unwrap(), "0x6004");
    }

    #[test]
    fn empty_code_is_distinct_error() {
        let url = serve_once(r#"{"jsonrpc":"2.0","id":1,"result":"0x"}"#);
        assert!(matches!(fetch_code(&url, ADDR), Err(RpcError::EmptyCode(_))));
    }

    #[test]
    fn node_errors_surface() {
        let url = serve_once(r#"{"jsonrpc":"2.0","id":1,"error":{"code":-32000,"message":"boom"}}"#);
        assert!(matches!(fetch_code(&url, ADDR), Err(RpcError::Node { .. })));
    }

    #[test]
    fn unreachable_url_is_network_error() {
        // bind and drop a listener to get a port nobody serves
        let port = {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let url = format!("http://127.0.0.1:{}", port);
        assert!(matches!(
            fetch_code(&url, ADDR),
            Err(RpcError::Network { .. })
        ));
    }

    #[test]
    fn rejects_bad_addresses() {
        assert!(matches!(
            fetch_code("http://localhost", "0x1234"),
            Err(RpcError::BadAddress(_))
        ));
        assert!(matches!(
            fetch_code("http://localhost", "1122334455667788990011223344556677889900"),
            Err(RpcError::BadAddress(_))
        ));
    }
}
