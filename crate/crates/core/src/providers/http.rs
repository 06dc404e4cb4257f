use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{
    EmbeddingProvider, GenerationProvider, GenerationRequest, LocatorProvider, PosProvider, ProviderError, QaAnswer,
    QaProvider, TurnRange,
};

/// Retry schedule for transient failures: `max_retries` extra attempts, the
/// delay doubling from `initial_backoff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    #[serde(with = "millis")]
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 2,
            initial_backoff: Duration::from_millis(200),
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            max_retries: 0,
            initial_backoff: Duration::ZERO,
        }
    }

    /// Runs `call` until it succeeds, returns a non-retryable error, or the
    /// retries are used up. `Unavailable` errors report the attempt count.
    pub fn run<T>(&self, mut call: impl FnMut() -> Result<T, ProviderError>) -> Result<T, ProviderError> {
        let mut delay = self.initial_backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match call() {
                Ok(v) => return Ok(v),
                Err(ProviderError::Unavailable { detail, .. }) => {
                    if attempts > self.max_retries {
                        return Err(ProviderError::Unavailable { attempts, detail });
                    }
                    warn!(attempts, %detail, "provider call failed, retrying");
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                    }
                    delay *= 2;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// A JSON-over-HTTP endpoint with optional bearer token.
#[derive(Debug, Clone)]
pub struct HttpEndpoint {
    pub url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    agent: ureq::Agent,
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        let timeout = Duration::from_secs(60);
        HttpEndpoint {
            url: url.into(),
            api_key: None,
            timeout,
            retry: RetryPolicy::default(),
            agent: Self::agent(timeout),
        }
    }

    fn agent(timeout: Duration) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into()
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key.filter(|k| !k.is_empty());
        self
    }

    /// Reads the bearer token from the named environment variable, if set.
    pub fn with_api_key_env(self, var: &str) -> Self {
        self.with_api_key(std::env::var(var).ok())
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self.agent = Self::agent(timeout);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn post<Req: Serialize, Resp: DeserializeOwned>(&self, body: &Req) -> Result<Resp, ProviderError> {
        self.retry.run(|| {
            let mut request = self.agent.post(&self.url);
            if let Some(key) = &self.api_key {
                request = request.header("Authorization", format!("Bearer {key}"));
            }
            let mut response = request.send_json(body).map_err(|e| match e {
                ureq::Error::StatusCode(code) if (400..500).contains(&code) && code != 429 => {
                    ProviderError::BadResponse(format!("{} returned HTTP {code}", self.url))
                }
                other => ProviderError::unavailable(format!("{}: {other}", self.url)),
            })?;
            response
                .body_mut()
                .read_json::<Resp>()
                .map_err(|e| ProviderError::BadResponse(format!("{}: {e}", self.url)))
        })
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct HttpEmbedder(pub HttpEndpoint);

impl EmbeddingProvider for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let resp: EmbedResponse = self.0.post(&EmbedRequest { texts })?;
        if resp.vectors.len() != texts.len() {
            return Err(ProviderError::BadResponse(format!(
                "expected {} vectors, got {}",
                texts.len(),
                resp.vectors.len()
            )));
        }
        Ok(resp.vectors)
    }
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

#[derive(Debug, Clone)]
pub struct HttpGenerator(pub HttpEndpoint);

impl GenerationProvider for HttpGenerator {
    fn generate(&self, request: &GenerationRequest) -> Result<String, ProviderError> {
        let resp: GenerateResponse = self.0.post(request)?;
        Ok(resp.text)
    }
}

#[derive(Serialize)]
struct LocateRequest<'a> {
    question: &'a str,
    turns: &'a [String],
}

#[derive(Deserialize)]
struct LocateResponse {
    ranges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone)]
pub struct HttpLocator(pub HttpEndpoint);

impl LocatorProvider for HttpLocator {
    fn locate(&self, question: &str, turns: &[String]) -> Result<Vec<TurnRange>, ProviderError> {
        let resp: LocateResponse = self.0.post(&LocateRequest { question, turns })?;
        Ok(resp.ranges.into_iter().map(|[s, e]| (s, e)).collect())
    }
}

#[derive(Serialize)]
struct QaRequest<'a> {
    question: &'a str,
    context: &'a str,
}

#[derive(Debug, Clone)]
pub struct HttpQa(pub HttpEndpoint);

impl QaProvider for HttpQa {
    fn answer(&self, question: &str, context: &str) -> Result<QaAnswer, ProviderError> {
        let resp: QaAnswer = self.0.post(&QaRequest { question, context })?;
        if !(0.0..=1.0).contains(&resp.confidence) {
            return Err(ProviderError::BadResponse(format!(
                "confidence {} outside [0, 1]",
                resp.confidence
            )));
        }
        Ok(resp)
    }
}

#[derive(Serialize)]
struct PosRequest<'a> {
    tokens: &'a [String],
}

#[derive(Deserialize)]
struct PosResponse {
    tags: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct HttpPosTagger(pub HttpEndpoint);

impl PosProvider for HttpPosTagger {
    fn tag(&self, tokens: &[String]) -> Result<Vec<String>, ProviderError> {
        let resp: PosResponse = self.0.post(&PosRequest { tokens })?;
        if resp.tags.len() != tokens.len() {
            return Err(ProviderError::BadResponse(format!(
                "expected {} tags, got {}",
                tokens.len(),
                resp.tags.len()
            )));
        }
        Ok(resp.tags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn retry_reports_attempt_count() {
        let calls = Cell::new(0);
        let err = RetryPolicy::none()
            .run::<()>(|| {
                calls.set(calls.get() + 1);
                Err(ProviderError::unavailable("timeout"))
            })
            .unwrap_err();
        assert_eq!(calls.get(), 1);
        assert_eq!(
            err,
            ProviderError::Unavailable {
                attempts: 1,
                detail: "timeout".into()
            }
        );

        let policy = RetryPolicy {
            max_retries: 2,
            initial_backoff: Duration::ZERO,
        };
        calls.set(0);
        let err = policy
            .run::<()>(|| {
                calls.set(calls.get() + 1);
                Err(ProviderError::unavailable("timeout"))
            })
            .unwrap_err();
        assert_eq!(calls.get(), 3);
        assert!(err.to_string().contains("after 3 attempt(s)"));
    }

    #[test]
    fn retry_recovers_and_skips_bad_responses() {
        let policy = RetryPolicy {
            max_retries: 2,
            initial_backoff: Duration::ZERO,
        };
        let calls = Cell::new(0);
        let v = policy
            .run(|| {
                calls.set(calls.get() + 1);
                if calls.get() < 2 {
                    Err(ProviderError::unavailable("flaky"))
                } else {
                    Ok(7)
                }
            })
            .unwrap();
        assert_eq!((v, calls.get()), (7, 2));

        calls.set(0);
        let err = policy
            .run::<()>(|| {
                calls.set(calls.get() + 1);
                Err(ProviderError::BadResponse("nope".into()))
            })
            .unwrap_err();
        assert_eq!(calls.get(), 1);
        assert!(matches!(err, ProviderError::BadResponse(_)));
    }

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        let endpoint = HttpEndpoint::new("http://127.0.0.1:9/embed")
            .with_timeout(Duration::from_millis(500))
            .with_retry(RetryPolicy {
                max_retries: 1,
                initial_backoff: Duration::ZERO,
            });
        let err = HttpEmbedder(endpoint).embed(&["x".into()]).unwrap_err();
        assert!(matches!(err, ProviderError::Unavailable { attempts: 2, .. }), "{err}");
    }

    #[test]
    fn generation_wire_body_has_only_contract_fields() {
        let req = GenerationRequest {
            prompt: "p".into(),
            temperature: 0.5,
            max_tokens: 128,
            segment_id: "s".into(),
            window: 1,
            trial: 2,
            excerpt: "e".into(),
        };
        let json = serde_json::to_value(&req).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"prompt": "p", "temperature": 0.5, "max_tokens": 128})
        );
    }
}
