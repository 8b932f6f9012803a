//! Line protocol. Each request and each response is one line: an
//! upper-case kind tag, a space, then comma-separated fields.
//!
//! ```text
//! INGEST x,y,rss1,...,rssN          -> OK INGESTED records,points
//! LOCATE rss1,...,rssN              -> OK POSITION x,y
//! LOCATE alg,k,rss1,...,rssN        -> OK POSITION x,y
//! TRACK_START rss1,...,rssN         -> OK POSITION x,y
//! TRACK_STEP t,heading[,length]     -> OK STEP t,x,y
//! SHUTDOWN                          -> OK BYE
//! any failure                       -> ERR code message
//! ```
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, so positions cross the wire unchanged.

use std::fmt;
use std::str::FromStr;

use indoorloc::{Algorithm, FingerprintRecord, LocateConfig, Position, StepEvent, TrajectoryPoint};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ProtocolError(pub String);

fn perr(message: impl Into<String>) -> ProtocolError {
    ProtocolError(message.into())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    Ingest(FingerprintRecord<f64>),
    /// `config: None` uses the server defaults.
    Locate {
        rss: Vec<f64>,
        config: Option<LocateConfig<f64>>,
    },
    TrackStart {
        rss: Vec<f64>,
    },
    /// `step_length: None` uses the server default.
    TrackStep {
        event: StepEvent<f64>,
        step_length: Option<f64>,
    },
    Shutdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    /// The line is not a well-formed request.
    Protocol,
    EmptyMap,
    /// Tracking request outside an open track.
    Session,
    /// Well-formed, but refused by the localization library.
    Rejected,
    Storage,
}

impl ErrorCode {
    pub fn name(self) -> &'static str {
        match self {
            ErrorCode::Protocol => "protocol",
            ErrorCode::EmptyMap => "empty_map",
            ErrorCode::Session => "session",
            ErrorCode::Rejected => "rejected",
            ErrorCode::Storage => "storage",
        }
    }
}

impl FromStr for ErrorCode {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, ProtocolError> {
        match s {
            "protocol" => Ok(ErrorCode::Protocol),
            "empty_map" => Ok(ErrorCode::EmptyMap),
            "session" => Ok(ErrorCode::Session),
            "rejected" => Ok(ErrorCode::Rejected),
            "storage" => Ok(ErrorCode::Storage),
            other => Err(perr(format!("unknown error code `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Ingested { records: usize, points: usize },
    Position(Position<f64>),
    Step(TrajectoryPoint<f64>),
    Bye,
    Error { code: ErrorCode, message: String },
}

impl Response {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        let message: String = message.into();
        Response::Error {
            code,
            message: message.replace(['\r', '\n'], " "),
        }
    }

    pub fn is_ok(&self) -> bool {
        !matches!(self, Response::Error { .. })
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Request::Ingest(r) => write!(f, "INGEST {},{},{}", r.x, r.y, join(&r.ap_rss)),
            Request::Locate { rss, config: None } => write!(f, "LOCATE {}", join(rss)),
            Request::Locate {
                rss,
                config: Some(config),
            } => write!(f, "LOCATE {},{},{}", config.algorithm, config.k, join(rss)),
            Request::TrackStart { rss } => write!(f, "TRACK_START {}", join(rss)),
            Request::TrackStep { event, step_length } => {
                write!(f, "TRACK_STEP {},{}", event.t, event.heading)?;
                if let Some(d) = step_length {
                    write!(f, ",{d}")?;
                }
                Ok(())
            }
            Request::Shutdown => f.write_str("SHUTDOWN"),
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Ingested { records, points } => write!(f, "OK INGESTED {records},{points}"),
            Response::Position(p) => write!(f, "OK POSITION {},{}", p.x(), p.y()),
            Response::Step(p) => write!(f, "OK STEP {},{},{}", p.t, p.position.x(), p.position.y()),
            Response::Bye => f.write_str("OK BYE"),
            Response::Error { code, message } => write!(f, "ERR {} {message}", code.name()),
        }
    }
}

fn split_tag(line: &str) -> (&str, Option<&str>) {
    match line.split_once(' ') {
        Some((tag, rest)) => (tag, Some(rest)),
        None => (line, None),
    }
}

fn fields<'a>(payload: Option<&'a str>, tag: &str) -> Result<Vec<&'a str>, ProtocolError> {
    let payload = payload.ok_or_else(|| perr(format!("{tag} needs a payload")))?;
    let fields: Vec<&str> = payload.split(',').map(str::trim).collect();
    if let Some(i) = fields.iter().position(|f| f.is_empty()) {
        return Err(perr(format!("field {} is empty", i + 1)));
    }
    Ok(fields)
}

fn number(field: &str) -> Result<f64, ProtocolError> {
    let v: f64 = field.parse().map_err(|_| perr(format!("`{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(perr(format!("`{field}` is not finite")));
    }
    Ok(v)
}

fn numbers(fields: &[&str]) -> Result<Vec<f64>, ProtocolError> {
    fields.iter().map(|f| number(f)).collect()
}

fn rss_list(fields: &[&str]) -> Result<Vec<f64>, ProtocolError> {
    if fields.is_empty() {
        return Err(perr("no RSS values"));
    }
    numbers(fields)
}

/// Parses one request line, without its line terminator.
pub fn parse_request(line: &str) -> Result<Request, ProtocolError> {
    let (tag, payload) = split_tag(line);
    match tag {
        "INGEST" => {
            let f = fields(payload, tag)?;
            if f.len() < 3 {
                return Err(perr("INGEST needs x, y and at least one RSS value"));
            }
            let v = numbers(&f)?;
            Ok(Request::Ingest(FingerprintRecord::new(v[0], v[1], v[2..].to_vec())))
        }
        "LOCATE" => {
            let f = fields(payload, tag)?;
            match f[0].parse::<Algorithm>() {
                Ok(algorithm) => {
                    let k_field = f.get(1).ok_or_else(|| perr("LOCATE with an algorithm needs k"))?;
                    let k: usize = k_field
                        .parse()
                        .map_err(|_| perr(format!("`{k_field}` is not a valid k")))?;
                    let config = LocateConfig::new(algorithm, k).map_err(|e| perr(e.to_string()))?;
                    Ok(Request::Locate {
                        rss: rss_list(&f[2..])?,
                        config: Some(config),
                    })
                }
                Err(_) => Ok(Request::Locate {
                    rss: rss_list(&f)?,
                    config: None,
                }),
            }
        }
        "TRACK_START" => Ok(Request::TrackStart {
            rss: rss_list(&fields(payload, tag)?)?,
        }),
        "TRACK_STEP" => {
            let f = fields(payload, tag)?;
            if !(2..=3).contains(&f.len()) {
                return Err(perr("TRACK_STEP needs t, heading and an optional step length"));
            }
            let v = numbers(&f)?;
            Ok(Request::TrackStep {
                event: StepEvent { t: v[0], heading: v[1] },
                step_length: v.get(2).copied(),
            })
        }
        "SHUTDOWN" => match payload {
            None => Ok(Request::Shutdown),
            Some(_) => Err(perr("SHUTDOWN takes no payload")),
        },
        "" => Err(perr("empty request")),
        other => Err(perr(format!("unknown request `{}`", truncate(other, 32)))),
    }
}

fn truncate(s: &str, max_chars: usize) -> String {
    match s.char_indices().nth(max_chars) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_owned(),
    }
}

/// Parses one response line, as a client would.
pub fn parse_response(line: &str) -> Result<Response, ProtocolError> {
    let (status, rest) = split_tag(line);
    let rest = rest.unwrap_or("");
    match status {
        "OK" => {
            let (kind, payload) = split_tag(rest);
            let f = || fields(payload, kind);
            match kind {
                "INGESTED" => {
                    let f = f()?;
                    let count = |s: &str| s.parse::<usize>().map_err(|_| perr(format!("bad count `{s}`")));
                    match f.as_slice() {
                        [records, points] => Ok(Response::Ingested {
                            records: count(records)?,
                            points: count(points)?,
                        }),
                        _ => Err(perr("INGESTED needs two counts")),
                    }
                }
                "POSITION" => match numbers(&f()?)?.as_slice() {
                    &[x, y] => Ok(Response::Position(
                        Position::new(x, y).map_err(|e| perr(e.to_string()))?,
                    )),
                    _ => Err(perr("POSITION needs x,y")),
                },
                "STEP" => match numbers(&f()?)?.as_slice() {
                    &[t, x, y] => Ok(Response::Step(TrajectoryPoint {
                        t,
                        position: Position::new(x, y).map_err(|e| perr(e.to_string()))?,
                    })),
                    _ => Err(perr("STEP needs t,x,y")),
                },
                "BYE" if payload.is_none() => Ok(Response::Bye),
                other => Err(perr(format!("unknown response `{other}`"))),
            }
        }
        "ERR" => {
            let (code, message) = split_tag(rest);
            Ok(Response::Error {
                code: code.parse()?,
                message: message.unwrap_or("").to_owned(),
            })
        }
        other => Err(perr(format!("unknown status `{}`", truncate(other, 32)))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requests_round_trip() {
        let requests = [
            Request::Ingest(FingerprintRecord::new(1.0, 0.0, vec![-53.0, -54.5, -0.25])),
            Request::Locate {
                rss: vec![-46.0, -41.0],
                config: None,
            },
            Request::Locate {
                rss: vec![-46.0, 0.1 + 0.2],
                config: Some(LocateConfig::knn(3).unwrap()),
            },
            Request::TrackStart { rss: vec![-70.0] },
            Request::TrackStep {
                event: StepEvent { t: 1.5, heading: 3.0 },
                step_length: None,
            },
            Request::TrackStep {
                event: StepEvent { t: 2.0, heading: 0.0 },
                step_length: Some(0.65),
            },
            Request::Shutdown,
        ];
        for r in requests {
            assert_eq!(parse_request(&r.to_string()).unwrap(), r, "{r}");
        }
    }

    #[test]
    fn responses_round_trip() {
        let responses = [
            Response::Ingested { records: 15, points: 9 },
            Response::Position(Position::new(0.1 + 0.2, -3.0).unwrap()),
            Response::Step(TrajectoryPoint {
                t: 4.0,
                position: Position::new(1e-17, 2.5).unwrap(),
            }),
            Response::Bye,
            Response::error(ErrorCode::EmptyMap, "empty map"),
        ];
        for r in responses {
            assert_eq!(parse_response(&r.to_string()).unwrap(), r, "{r}");
        }
    }

    #[test]
    fn error_messages_stay_on_one_line() {
        let r = Response::error(ErrorCode::Protocol, "a\nb\rc");
        assert_eq!(r.to_string(), "ERR protocol a b c");
    }

    #[test]
    fn locate_forms() {
        assert_eq!(
            parse_request("LOCATE nn,1,-40,-50").unwrap(),
            Request::Locate {
                rss: vec![-40.0, -50.0],
                config: Some(LocateConfig::nn()),
            }
        );
        assert_eq!(
            parse_request("LOCATE -40, -50").unwrap(),
            Request::Locate {
                rss: vec![-40.0, -50.0],
                config: None,
            }
        );
    }

    #[test]
    fn malformed_requests() {
        for line in [
            "",
            "locate -40",
            "LOCATE",
            "LOCATE ",
            "LOCATE -40,,-50",
            "LOCATE wknn",
            "LOCATE wknn,0,-40",
            "LOCATE wknn,-1,-40",
            "LOCATE wknn,5",
            "LOCATE nan",
            "LOCATE inf,-40",
            "LOCATE -40,x",
            "INGEST 1,2",
            "INGEST 1,2,abc",
            "TRACK_START",
            "TRACK_STEP 1",
            "TRACK_STEP 1,2,3,4",
            "TRACK_STEP 1,NaN",
            "SHUTDOWN now",
            "HELLO",
            " LOCATE -40",
        ] {
            assert!(parse_request(line).is_err(), "{line:?}");
        }
    }
}
