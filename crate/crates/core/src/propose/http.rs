//! Live chat-completion client. One request per proposal slot; the model
//! must answer with four fenced blocks tagged per component. Every exchange
//! is logged to disk for audit.

use super::{Proposal, ProposalError, ProposerConfig};
use crate::propose::PromptBundle;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::Path;
use std::time::Duration;

/// Environment variable holding the API key.
pub const API_KEY_VAR: &str = "BELIEFWORLD_API_KEY";

#[derive(Debug, Serialize, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChoiceMessage {
    content: String,
}

pub struct HttpProposer {
    pub config: ProposerConfig,
    client: reqwest::blocking::Client,
}

impl HttpProposer {
    pub fn new(config: ProposerConfig) -> Result<HttpProposer, ProposalError> {
        if config.endpoint.is_none() || config.model_name.is_none() {
            return Err(ProposalError::Config(
                "http mode requires endpoint and model_name".to_string(),
            ));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ProposalError::Http(e.to_string()))?;
        Ok(HttpProposer { config, client })
    }

    /// Issues one request per slot, keeping at most `max_parallel` in
    /// flight. Results come back in slot order.
    pub fn propose(
        &self,
        bundle: &PromptBundle,
        count: usize,
        audit_tag: &str,
    ) -> Vec<Result<Proposal, ProposalError>> {
        let prompt = bundle.render();
        let width = self.config.max_parallel.max(1);
        if width == 1 {
            return (0..count).map(|slot| self.one(&prompt, slot, audit_tag)).collect();
        }
        let mut out = Vec::with_capacity(count);
        for chunk_start in (0..count).step_by(width) {
            let chunk_end = (chunk_start + width).min(count);
            let mut results: Vec<Option<Result<Proposal, ProposalError>>> =
                (chunk_start..chunk_end).map(|_| None).collect();
            std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for slot in chunk_start..chunk_end {
                    let prompt = &prompt;
                    handles.push((slot, scope.spawn(move || self.one(prompt, slot, audit_tag))));
                }
                for (slot, handle) in handles {
                    results[slot - chunk_start] = Some(match handle.join() {
                        Ok(r) => r,
                        Err(_) => Err(ProposalError::Http("request thread panicked".into())),
                    });
                }
            });
            out.extend(results.into_iter().map(|r| r.expect("filled")));
        }
        out
    }

    fn one(&self, prompt: &str, slot: usize, audit_tag: &str) -> Result<Proposal, ProposalError> {
        let endpoint = self.config.endpoint.as_deref().expect("validated");
        let model = self.config.model_name.as_deref().expect("validated");
        let body = json!({
            "model": model,
            "messages": [{"role": "user", "content": prompt}],
            "seed": self.config.request_seed + slot as u64,
            "temperature": self.config.temperature,
        });
        self.audit(audit_tag, slot, "request", &body.to_string());
        let key = std::env::var(API_KEY_VAR)
            .map_err(|_| ProposalError::Config(format!("{API_KEY_VAR} is not set")))?;
        let resp = self
            .client
            .post(endpoint)
            .bearer_auth(key)
            .json(&body)
            .send()
            .map_err(|e| ProposalError::Http(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ProposalError::Http(e.to_string()))?;
        self.audit(audit_tag, slot, "response", &text);
        if !status.is_success() {
            return Err(ProposalError::Http(format!("status {status}: {text}")));
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| ProposalError::Malformed(e.to_string()))?;
        let content = parsed
            .choices
            .first()
            .map(|c| c.message.content.as_str())
            .ok_or_else(|| ProposalError::Malformed("empty choices".to_string()))?;
        let sources = extract_component_blocks(content)?;
        Ok(Proposal { sources, label: format!("llm:{model}") })
    }

    fn audit(&self, tag: &str, slot: usize, kind: &str, payload: &str) {
        let Some(dir) = &self.config.audit_dir else { return };
        let _ = std::fs::create_dir_all(dir);
        let path = Path::new(dir).join(format!("{tag}_slot{slot}_{kind}.json"));
        let _ = std::fs::write(path, payload);
    }
}

/// Pulls the four fenced blocks tagged `initial`, `transition`,
/// `observation`, `reward` out of a completion, in any order.
pub fn extract_component_blocks(content: &str) -> Result<[String; 4], ProposalError> {
    let mut out: [Option<String>; 4] = Default::default();
    let tags = ["initial", "transition", "observation", "reward"];
    let mut rest = content;
    while let Some(start) = rest.find("```") {
        let after = &rest[start + 3..];
        let Some(nl) = after.find('\n') else { break };
        let tag = after[..nl].trim().to_lowercase();
        let body_start = nl + 1;
        let Some(end) = after[body_start..].find("```") else { break };
        let body = &after[body_start..body_start + end];
        if let Some(idx) = tags.iter().position(|t| *t == tag) {
            out[idx] = Some(body.trim().to_string());
        }
        rest = &after[body_start + end + 3..];
    }
    let missing: Vec<&str> =
        tags.iter().zip(&out).filter(|(_, o)| o.is_none()).map(|(t, _)| *t).collect();
    if !missing.is_empty() {
        return Err(ProposalError::Malformed(format!(
            "completion lacks fenced block(s): {}",
            missing.join(", ")
        )));
    }
    Ok(out.map(|o| o.unwrap()))
}
