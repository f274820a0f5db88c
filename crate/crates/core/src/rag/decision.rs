use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    RetriedOk,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortDecision {
    pub case_number: String,
    /// 1 = include, 0 = exclude; absent when every attempt failed.
    pub decision: Option<u8>,
    pub rationale: String,
    pub parse_status: ParseStatus,
    pub attempts: usize,
}

/// Byte range of the first balanced `{...}` in `text`, skipping braces
/// inside JSON strings.
pub(crate) fn first_object(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let mut from = 0;
    while let Some(rel) = text[from..].find('{') {
        let start = from + rel;
        let (mut depth, mut in_str, mut escaped) = (0usize, false, false);
        for (i, &c) in bytes.iter().enumerate().skip(start) {
            if in_str {
                match c {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_str = false,
                    _ => {}
                }
                continue;
            }
            match c {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        let candidate = &text[start..=i];
                        if serde_json::from_str::<Value>(candidate).is_ok() {
                            return Some(candidate);
                        }
                        break;
                    }
                }
                _ => {}
            }
        }
        from = start + 1;
    }
    None
}

/// Extracts and validates the first JSON object in a model reply.
pub fn parse_decision(text: &str) -> Result<CohortDecision> {
    let raw = first_object(text).ok_or_else(|| Error::ParseFailure("no JSON object in reply".into()))?;
    let v: Value = serde_json::from_str(raw).map_err(|e| Error::ParseFailure(e.to_string()))?;
    let case_number = match v.get("case_number") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => return Err(Error::ParseFailure("missing case_number".into())),
    };
    let decision = match v.get("decision") {
        Some(Value::Number(n)) => match n.as_u64() {
            Some(d @ (0 | 1)) => d as u8,
            _ => return Err(Error::ParseFailure(format!("decision must be 0 or 1, got {n}"))),
        },
        Some(Value::String(s)) if s == "0" || s == "1" => s.parse().expect("digit"),
        Some(other) => return Err(Error::ParseFailure(format!("decision must be 0 or 1, got {other}"))),
        None => return Err(Error::ParseFailure("missing decision".into())),
    };
    let rationale = match v.get("rationale") {
        Some(Value::String(s)) => s.clone(),
        None | Some(Value::Null) => String::new(),
        Some(_) => return Err(Error::ParseFailure("rationale must be text".into())),
    };
    Ok(CohortDecision { case_number, decision: Some(decision), rationale, parse_status: ParseStatus::Ok, attempts: 1 })
}
