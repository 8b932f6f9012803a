#![allow(dead_code)]

use std::io;
use std::net::SocketAddr;
use std::thread::JoinHandle;

use indoorloc::store::field_sample;
use indoorloc_service::protocol::parse_request;
use indoorloc_service::{Client, Request, Response, Server, ServerConfig, ServerState};
use rand::Rng;

pub const ORIGIN_RSS: [f64; 5] = [-46.0, -41.0, -55.0, -68.0, -67.0];

pub struct Running {
    pub addr: SocketAddr,
    pub state: std::sync::Arc<ServerState>,
    pub handle: JoinHandle<io::Result<()>>,
}

impl Running {
    pub fn client(&self) -> Client {
        Client::connect(self.addr).unwrap()
    }

    pub fn shutdown(self) {
        let mut c = self.client();
        assert_eq!(c.send(&Request::Shutdown).unwrap(), Response::Bye);
        self.handle.join().unwrap().unwrap();
    }
}

pub fn spawn(config: ServerConfig) -> Running {
    let server = Server::bind("127.0.0.1:0", ServerState::new(config).unwrap()).unwrap();
    let addr = server.local_addr().unwrap();
    let state = server.state();
    let handle = std::thread::spawn(move || server.run());
    Running { addr, state, handle }
}

pub fn ingest_fixture(client: &mut Client) {
    for record in field_sample::<f64>() {
        let response = client.send(&Request::Ingest(record)).unwrap();
        assert!(matches!(response, Response::Ingested { .. }), "{response}");
    }
}

fn random_text<R: Rng>(rng: &mut R, len: usize) -> String {
    const CHARS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ_abcdefghijklmnopqrstuvwxyz0123456789 ,.-+eE";
    (0..len)
        .map(|_| CHARS[rng.random_range(0..CHARS.len())] as char)
        .collect()
}

fn numbers<R: Rng>(rng: &mut R, n: usize) -> Vec<String> {
    (0..n)
        .map(|_| format!("{}", rng.random_range(-100.0..0.0_f64)))
        .collect()
}

/// Lines that a server with a 5-AP map of at most 9 points and no open
/// track must answer with `ERR`. None contains `\n`.
pub fn malformed_line<R: Rng>(rng: &mut R) -> Vec<u8> {
    let line = match rng.random_range(0..12) {
        0 => loop {
            let len = rng.random_range(0..80);
            let s = random_text(rng, len);
            if parse_request(&s).is_err() {
                break s;
            }
        },
        1 => {
            let n = loop {
                let n = rng.random_range(1..12);
                if n != 5 {
                    break n;
                }
            };
            let tag = ["LOCATE", "TRACK_START"][rng.random_range(0..2)];
            format!("{tag} {}", numbers(rng, n).join(","))
        }
        2 => {
            let n = loop {
                let n = rng.random_range(3..12);
                if n != 7 {
                    break n;
                }
            };
            format!("INGEST {}", numbers(rng, n).join(","))
        }
        3 => {
            let mut f = numbers(rng, 7);
            let i = rng.random_range(0..7);
            f[i] = ["NaN", "inf", "-inf", "1e999", "x", "--1", "0x10", "1,,2", ""][rng.random_range(0..9)].into();
            let tag = ["INGEST", "LOCATE", "TRACK_START"][rng.random_range(0..3)];
            let take = if tag == "INGEST" { 7 } else { 5 };
            if i >= take {
                f[0] = "nan".into();
            }
            format!("{tag} {}", f[..take].join(","))
        }
        4 => {
            let alg = ["nn", "knn", "wknn"][rng.random_range(0..3)];
            // NN consults one neighbor whatever k is, so only bad syntax fails.
            let bad_k: &[&str] = if alg == "nn" {
                &["0", "-1", "1.5", "k", ""]
            } else {
                &["0", "-1", "10", "99", "1.5", "k", ""]
            };
            let k = bad_k[rng.random_range(0..bad_k.len())];
            format!("LOCATE {alg},{k},{}", numbers(rng, 5).join(","))
        }
        5 => format!(
            "LOCATE {},5,{}",
            random_text(rng, 4).replace([',', ' '], "q") + "z",
            numbers(rng, 5).join(",")
        ),
        6 => {
            let n = rng.random_range(2..4);
            format!("TRACK_STEP {}", numbers(rng, n).join(","))
        }
        7 => {
            let len = rng.random_range(1..64);
            let mut bytes: Vec<u8> = (0..len).map(|_| rng.random_range(0x80..=0xff_u8)).collect();
            bytes.splice(0..0, b"LOCATE ".iter().copied());
            return bytes;
        }
        8 => [
            "",
            " ",
            "locate -1,-2,-3,-4,-5",
            " LOCATE -1,-2,-3,-4,-5",
            "LOCATE -1,-2,-3,-4,-5,",
            "LOCATE  -1",
        ][rng.random_range(0..6)]
        .into(),
        9 => {
            let len = rng.random_range(0..5);
            format!("SHUTDOWN {}", random_text(rng, len))
        }
        10 => format!(
            "{} {}",
            ["INGEST", "LOCATE", "TRACK_START", "TRACK_STEP"][rng.random_range(0..4)],
            "\t"
        ),
        _ => {
            let mut bytes = vec![0u8; rng.random_range(1..40)];
            for b in bytes.iter_mut() {
                *b = loop {
                    let b: u8 = rng.random();
                    if b != b'\n' && b != b'\r' {
                        break b;
                    }
                };
            }
            if std::str::from_utf8(&bytes).map_or(true, |s| parse_request(s).is_err()) {
                return bytes;
            }
            return b"?".to_vec();
        }
    };
    line.into_bytes()
}
