//! Provider-abstracted LMM client with an on-disk exchange cache.
//!
//! A provider turns `(image, prompt)` into response text. Two are built in:
//! an HTTP provider speaking the common vision-chat-completion shape
//! ([`http`]) and an offline replay provider serving recorded fixtures
//! ([`replay`]). The client wraps either with image preparation, a
//! content-addressed cache keyed by `(image hash, prompt hash, model id)`,
//! retry with exponential backoff, and bounded-concurrency batch submission.

pub mod cache;
pub mod http;
mod image_prep;
pub mod replay;

pub use cache::ExchangeCache;
pub use http::{build_request_body, HttpProvider, API_KEY_ENV};
pub use image_prep::{prepare_image, PreparedImage, MAX_LONG_EDGE_PX};
pub use replay::ReplayStore;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::PromptTemplate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Http,
    Replay,
}

/// Client configuration. The replay provider ignores the endpoint and
/// sampling fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub provider: ProviderKind,
    pub model_id: String,
    pub endpoint_url: Option<String>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub concurrency_limit: usize,
    pub max_image_bytes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Replay,
            model_id: "gpt-4-vision".to_string(),
            endpoint_url: None,
            temperature: 0.0,
            max_output_tokens: 1024,
            timeout_s: 60.0,
            max_retries: 3,
            concurrency_limit: 4,
            max_image_bytes: 20 * 1024 * 1024,
        }
    }
}

/// One submitted-and-answered exchange, as cached and returned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmmExchange {
    pub image_hash: String,
    pub prompt_hash: String,
    pub model_id: String,
    pub response_text: String,
    pub latency_ms: u64,
    pub timestamp: String,
    pub from_cache: bool,
}

#[derive(Debug, Error)]
pub enum LmmError {
    #[error("image decode failed: {0}")]
    ImageDecode(String),
    #[error("image of {size} bytes exceeds the {cap} byte cap")]
    ImageTooLarge { size: usize, cap: usize },
    #[error("provider gave up after {attempts} attempts: {last_error}")]
    ProviderTimeout { attempts: u32, last_error: String },
    #[error("provider rejected the request{}: {message}",
            status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    ProviderRejection { status: Option<u16>, message: String },
    #[error("no replay fixture for image {image_hash}, prompt {prompt_hash}, model {model_id}")]
    MissingFixture {
        image_hash: String,
        prompt_hash: String,
        model_id: String,
    },
    #[error("storage failure: {0}")]
    Storage(String),
    #[error("missing API key: set the {0} environment variable")]
    MissingApiKey(&'static str),
    #[error("http provider requires an endpoint URL")]
    MissingEndpoint,
}

/// Provider-side failure classification, mapped by the retry loop.
#[derive(Debug)]
pub enum ProviderError {
    /// Transient; worth retrying with backoff.
    Retryable { message: String },
    /// Definitive refusal; surfaced immediately.
    Rejection { status: Option<u16>, message: String },
    /// Replay store has no entry for this key.
    MissingFixture {
        image_hash: String,
        prompt_hash: String,
        model_id: String,
    },
}

/// A fully prepared request, shared by all providers.
#[derive(Debug)]
pub struct CompletionRequest<'a> {
    pub model_id: &'a str,
    pub prompt_text: &'a str,
    pub prompt_hash: &'a str,
    pub image: &'a PreparedImage,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

pub trait LmmProvider: Send + Sync {
    fn name(&self) -> &'static str;
    /// True when completions involve no network (pure lookup).
    fn is_offline(&self) -> bool;
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError>;
}

/// Deterministic composite key for one `(image, prompt, model)` exchange.
/// Stable across runs and platforms.
pub fn cache_key(image_hash: &str, prompt_hash: &str, model_id: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"floodgauge.exchange.v1\0");
    hasher.update(image_hash.as_bytes());
    hasher.update(b"\0");
    hasher.update(prompt_hash.as_bytes());
    hasher.update(b"\0");
    hasher.update(model_id.as_bytes());
    hex::encode(hasher.finalize())
}

const BACKOFF_BASE_MS: u64 = 250;
const BACKOFF_CAP_MS: u64 = 4_000;

fn backoff_delay(attempt: u32) -> Duration {
    let ms = BACKOFF_BASE_MS.saturating_mul(1u64 << attempt.min(16));
    Duration::from_millis(ms.min(BACKOFF_CAP_MS))
}

/// One image to estimate in a batch.
pub struct BatchItem {
    pub id: String,
    pub bytes: Vec<u8>,
}

pub struct LmmClient {
    provider: Arc<dyn LmmProvider>,
    cache: Option<ExchangeCache>,
    cfg: ModelConfig,
}

impl LmmClient {
    /// Wraps an explicit provider (used by tests and by `from_config`).
    pub fn with_provider(
        provider: Arc<dyn LmmProvider>,
        cfg: ModelConfig,
        cache_dir: Option<&Path>,
    ) -> Result<Self, LmmError> {
        let cache = cache_dir.map(ExchangeCache::open).transpose()?;
        Ok(Self {
            provider,
            cache,
            cfg,
        })
    }

    /// Builds the provider named by the config. The replay provider loads
    /// fixtures from `fixtures_dir`; the http provider reads its key from
    /// [`API_KEY_ENV`].
    pub fn from_config(
        cfg: ModelConfig,
        cache_dir: Option<&Path>,
        fixtures_dir: Option<&Path>,
    ) -> Result<Self, LmmError> {
        let provider: Arc<dyn LmmProvider> = match cfg.provider {
            ProviderKind::Replay => {
                let dir = fixtures_dir.ok_or_else(|| {
                    LmmError::Storage("replay provider requires a fixtures directory".into())
                })?;
                Arc::new(ReplayStore::open(dir)?)
            }
            ProviderKind::Http => {
                let endpoint = cfg
                    .endpoint_url
                    .clone()
                    .ok_or(LmmError::MissingEndpoint)?;
                Arc::new(HttpProvider::from_env(
                    &endpoint,
                    Duration::from_secs_f64(cfg.timeout_s),
                )?)
            }
        };
        Self::with_provider(provider, cfg, cache_dir)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Submits one image with the prompt, consulting the cache first.
    ///
    /// Cache hits return with `from_cache = true` and touch no provider.
    /// Fresh provider responses are persisted to the cache before returning.
    pub fn estimate_raw(
        &self,
        image_bytes: &[u8],
        prompt: &PromptTemplate,
    ) -> Result<LmmExchange, LmmError> {
        let prepared = prepare_image(image_bytes, self.cfg.max_image_bytes)?;
        let prompt_text = prompt.rendered();
        let key = cache_key(&prepared.hash, prompt.checksum(), &self.cfg.model_id);

        if let Some(cache) = &self.cache {
            if let Some(mut hit) = cache.lookup(&key) {
                hit.from_cache = true;
                return Ok(hit);
            }
        }

        let request = CompletionRequest {
            model_id: &self.cfg.model_id,
            prompt_text: &prompt_text,
            prompt_hash: prompt.checksum(),
            image: &prepared,
            temperature: self.cfg.temperature,
            max_output_tokens: self.cfg.max_output_tokens,
        };

        let started = Instant::now();
        let response_text = self.complete_with_retry(&request)?;
        let latency_ms = started.elapsed().as_millis() as u64;

        let exchange = LmmExchange {
            image_hash: prepared.hash.clone(),
            prompt_hash: prompt.checksum().to_string(),
            model_id: self.cfg.model_id.clone(),
            response_text,
            latency_ms,
            timestamp: chrono::Utc::now().to_rfc3339(),
            from_cache: false,
        };
        if let Some(cache) = &self.cache {
            cache.store(&key, &exchange)?;
        }
        Ok(LmmExchange {
            from_cache: self.provider.is_offline(),
            ..exchange
        })
    }

    fn complete_with_retry(&self, request: &CompletionRequest<'_>) -> Result<String, LmmError> {
        let attempts = self.cfg.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            match self.provider.complete(request) {
                Ok(text) => return Ok(text),
                Err(ProviderError::Retryable { message }) => {
                    last_error = message;
                    if attempt + 1 < attempts {
                        std::thread::sleep(backoff_delay(attempt));
                    }
                }
                Err(ProviderError::Rejection { status, message }) => {
                    return Err(LmmError::ProviderRejection { status, message });
                }
                Err(ProviderError::MissingFixture {
                    image_hash,
                    prompt_hash,
                    model_id,
                }) => {
                    return Err(LmmError::MissingFixture {
                        image_hash,
                        prompt_hash,
                        model_id,
                    });
                }
            }
        }
        Err(LmmError::ProviderTimeout {
            attempts,
            last_error,
        })
    }

    /// Runs up to `concurrency_limit` exchanges at once; results come back
    /// in input order.
    pub fn estimate_batch(
        &self,
        items: &[BatchItem],
        prompt: &PromptTemplate,
    ) -> Vec<Result<LmmExchange, LmmError>> {
        if items.is_empty() {
            return Vec::new();
        }
        let workers = self.cfg.concurrency_limit.max(1).min(items.len());
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<LmmExchange, LmmError>>>> =
            items.iter().map(|_| Mutex::new(None)).collect();

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= items.len() {
                        break;
                    }
                    let result = self.estimate_raw(&items[i].bytes, prompt);
                    *slots[i].lock().unwrap() = Some(result);
                });
            }
        });

        slots
            .into_iter()
            .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::build_prompt_named;
    use std::io::Cursor;

    pub(crate) fn tiny_png(seed: u8) -> Vec<u8> {
        let img = image::RgbImage::from_fn(8, 8, |x, y| {
            image::Rgb([seed, (x * 31) as u8, (y * 17) as u8])
        });
        let mut out = Vec::new();
        image::DynamicImage::ImageRgb8(img)
            .write_to(&mut Cursor::new(&mut out), image::ImageFormat::Png)
            .unwrap();
        out
    }

    /// Scripted provider that counts calls and tracks in-flight concurrency.
    pub(crate) struct ScriptedProvider {
        pub response: String,
        pub fail_first: usize,
        pub fatal: bool,
        pub delay: Duration,
        pub calls: AtomicUsize,
        inflight: AtomicUsize,
        pub max_inflight: AtomicUsize,
    }

    impl ScriptedProvider {
        pub fn ok(response: &str) -> Self {
            Self {
                response: response.to_string(),
                fail_first: 0,
                fatal: false,
                delay: Duration::ZERO,
                calls: AtomicUsize::new(0),
                inflight: AtomicUsize::new(0),
                max_inflight: AtomicUsize::new(0),
            }
        }

        pub fn failing(times: usize) -> Self {
            Self {
                fail_first: times,
                ..Self::ok("late success")
            }
        }
    }

    impl LmmProvider for ScriptedProvider {
        fn name(&self) -> &'static str {
            "scripted"
        }

        fn is_offline(&self) -> bool {
            false
        }

        fn complete(&self, _request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
            let call = self.calls.fetch_add(1, Ordering::SeqCst);
            let now = self.inflight.fetch_add(1, Ordering::SeqCst) + 1;
            self.max_inflight.fetch_max(now, Ordering::SeqCst);
            if !self.delay.is_zero() {
                std::thread::sleep(self.delay);
            }
            let result = if call < self.fail_first {
                if self.fatal {
                    Err(ProviderError::Rejection {
                        status: Some(400),
                        message: "bad request".into(),
                    })
                } else {
                    Err(ProviderError::Retryable {
                        message: "service unavailable".into(),
                    })
                }
            } else {
                Ok(self.response.clone())
            };
            self.inflight.fetch_sub(1, Ordering::SeqCst);
            result
        }
    }

    fn client_with(
        provider: Arc<dyn LmmProvider>,
        cache_dir: Option<&Path>,
        tweak: impl FnOnce(&mut ModelConfig),
    ) -> LmmClient {
        let mut cfg = ModelConfig::default();
        tweak(&mut cfg);
        LmmClient::with_provider(provider, cfg, cache_dir).unwrap()
    }

    #[test]
    fn cache_key_is_deterministic_and_sensitive() {
        let a = cache_key("img", "prompt", "model");
        assert_eq!(a, cache_key("img", "prompt", "model"));
        assert_ne!(a, cache_key("img", "prompt", "model2"));
        assert_ne!(a, cache_key("img", "prompt2", "model"));
        assert_ne!(a, cache_key("img2", "prompt", "model"));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn second_call_is_served_from_cache() {
        let dir = tempfile::tempdir().unwrap();
        let provider = Arc::new(ScriptedProvider::ok("depth text"));
        let client = client_with(provider.clone(), Some(dir.path()), |_| {});
        let prompt = build_prompt_named("appendix1").unwrap();
        let image = tiny_png(1);

        let first = client.estimate_raw(&image, &prompt).unwrap();
        assert!(!first.from_cache);
        let second = client.estimate_raw(&image, &prompt).unwrap();
        assert!(second.from_cache);
        assert_eq!(second.response_text, first.response_text);
        assert_eq!(provider.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn retry_exhaustion_times_out() {
        let provider = Arc::new(ScriptedProvider::failing(10));
        let client = client_with(provider.clone(), None, |c| c.max_retries = 2);
        let prompt = build_prompt_named("appendix1").unwrap();
        let err = client.estimate_raw(&tiny_png(2), &prompt).unwrap_err();
        match err {
            LmmError::ProviderTimeout { attempts, .. } => assert_eq!(attempts, 3),
            other => panic!("expected timeout, got {other:?}"),
        }
        assert_eq!(provider.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn transient_failures_recover_within_budget() {
        let provider = Arc::new(ScriptedProvider::failing(1));
        let client = client_with(provider.clone(), None, |c| c.max_retries = 2);
        let prompt = build_prompt_named("appendix1").unwrap();
        let exchange = client.estimate_raw(&tiny_png(3), &prompt).unwrap();
        assert_eq!(exchange.response_text, "late success");
        assert_eq!(provider.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn rejection_is_not_retried() {
        let provider = Arc::new(ScriptedProvider {
            fatal: true,
            ..ScriptedProvider::failing(10)
        });
        let client = client_with(provider.clone(), None, |c| c.max_retries = 5);
        let prompt = build_prompt_named("appendix1").unwrap();
        let err = client.estimate_raw(&tiny_png(4), &prompt).unwrap_err();
        assert!(matches!(err, LmmError::ProviderRejection { status: Some(400), .. }));
        assert_eq!(provider.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn undecodable_image_is_rejected() {
        let client = client_with(Arc::new(ScriptedProvider::ok("x")), None, |_| {});
        let prompt = build_prompt_named("appendix1").unwrap();
        let err = client.estimate_raw(b"not an image", &prompt).unwrap_err();
        assert!(matches!(err, LmmError::ImageDecode(_)));
    }

    #[test]
    fn batch_respects_concurrency_limit() {
        let provider = Arc::new(ScriptedProvider {
            delay: Duration::from_millis(25),
            ..ScriptedProvider::ok("depth")
        });
        let limit = 2;
        let client = client_with(provider.clone(), None, |c| c.concurrency_limit = limit);
        let prompt = build_prompt_named("appendix1").unwrap();
        let items: Vec<BatchItem> = (0..(3 * limit as u8))
            .map(|i| BatchItem {
                id: format!("p{i}"),
                bytes: tiny_png(i),
            })
            .collect();
        let results = client.estimate_batch(&items, &prompt);
        assert_eq!(results.len(), items.len());
        assert!(results.iter().all(|r| r.is_ok()));
        assert_eq!(provider.calls.load(Ordering::SeqCst), items.len());
        let peak = provider.max_inflight.load(Ordering::SeqCst);
        assert!(peak <= limit, "peak in-flight {peak} exceeded limit {limit}");
    }

    #[test]
    fn warm_cache_batch_rerun_makes_no_provider_calls() {
        let dir = tempfile::tempdir().unwrap();
        let provider = Arc::new(ScriptedProvider::ok("depth"));
        let client = client_with(provider.clone(), Some(dir.path()), |_| {});
        let prompt = build_prompt_named("appendix1").unwrap();
        let items: Vec<BatchItem> = (0..5u8)
            .map(|i| BatchItem {
                id: format!("p{i}"),
                bytes: tiny_png(i),
            })
            .collect();

        let first = client.estimate_batch(&items, &prompt);
        assert!(first.iter().all(|r| r.is_ok()));
        assert_eq!(provider.calls.load(Ordering::SeqCst), 5);

        let second = client.estimate_batch(&items, &prompt);
        assert_eq!(provider.calls.load(Ordering::SeqCst), 5, "re-run must be offline");
        for (a, b) in first.iter().zip(&second) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            assert!(b.from_cache);
            assert_eq!(a.response_text, b.response_text);
            assert_eq!(a.image_hash, b.image_hash);
        }
    }
}
