//! Offline replay provider: recorded response texts keyed by
//! `(image hash, prompt hash, model id)`.
//!
//! Fixture layout on disk is one text file per key plus a sidecar
//! `index.json` listing `{image_hash, prompt_hash, model_id, file}` entries.
//! Lookups are exact and bit-deterministic.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{cache_key, CompletionRequest, LmmError, LmmProvider, ProviderError};

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub image_hash: String,
    pub prompt_hash: String,
    pub model_id: String,
    pub file: String,
}

/// A directory of recorded responses, usable directly as a provider.
pub struct ReplayStore {
    dir: PathBuf,
    entries: Vec<ReplayEntry>,
    responses: HashMap<(String, String, String), String>,
}

impl ReplayStore {
    /// Opens (or initializes) a fixture directory. A missing index means an
    /// empty store; every indexed file must be readable.
    pub fn open(dir: &Path) -> Result<Self, LmmError> {
        fs::create_dir_all(dir)
            .map_err(|e| LmmError::Storage(format!("{}: {e}", dir.display())))?;
        let index_path = dir.join(INDEX_FILE);
        let entries: Vec<ReplayEntry> = if index_path.exists() {
            let text = fs::read_to_string(&index_path)
                .map_err(|e| LmmError::Storage(format!("{}: {e}", index_path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| LmmError::Storage(format!("{}: {e}", index_path.display())))?
        } else {
            Vec::new()
        };
        let mut responses = HashMap::new();
        for entry in &entries {
            let path = dir.join(&entry.file);
            let text = fs::read_to_string(&path)
                .map_err(|e| LmmError::Storage(format!("{}: {e}", path.display())))?;
            responses.insert(
                (
                    entry.image_hash.clone(),
                    entry.prompt_hash.clone(),
                    entry.model_id.clone(),
                ),
                text,
            );
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            entries,
            responses,
        })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// Records a response text for a key: writes the fixture file and
    /// rewrites the sidecar index.
    pub fn insert(
        &mut self,
        image_hash: &str,
        prompt_hash: &str,
        model_id: &str,
        response_text: &str,
    ) -> Result<(), LmmError> {
        let file = format!("{}.txt", &cache_key(image_hash, prompt_hash, model_id)[..16]);
        fs::write(self.dir.join(&file), response_text)
            .map_err(|e| LmmError::Storage(e.to_string()))?;
        self.entries.retain(|e| {
            !(e.image_hash == image_hash
                && e.prompt_hash == prompt_hash
                && e.model_id == model_id)
        });
        self.entries.push(ReplayEntry {
            image_hash: image_hash.to_string(),
            prompt_hash: prompt_hash.to_string(),
            model_id: model_id.to_string(),
            file,
        });
        self.responses.insert(
            (
                image_hash.to_string(),
                prompt_hash.to_string(),
                model_id.to_string(),
            ),
            response_text.to_string(),
        );
        self.write_index()
    }

    fn write_index(&self) -> Result<(), LmmError> {
        let json = serde_json::to_string_pretty(&self.entries)
            .map_err(|e| LmmError::Storage(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .map_err(|e| LmmError::Storage(e.to_string()))?;
        tmp.write_all(json.as_bytes())
            .map_err(|e| LmmError::Storage(e.to_string()))?;
        tmp.persist(self.dir.join(INDEX_FILE))
            .map_err(|e| LmmError::Storage(e.to_string()))?;
        Ok(())
    }
}

impl LmmProvider for ReplayStore {
    fn name(&self) -> &'static str {
        "replay"
    }

    fn is_offline(&self) -> bool {
        true
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        let key = (
            request.image.hash.clone(),
            request.prompt_hash.to_string(),
            request.model_id.to_string(),
        );
        self.responses
            .get(&key)
            .cloned()
            .ok_or(ProviderError::MissingFixture {
                image_hash: key.0,
                prompt_hash: key.1,
                model_id: key.2,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::tiny_png;
    use super::super::{prepare_image, LmmClient, ModelConfig};
    use super::*;
    use crate::prompt::build_prompt_named;
    use std::sync::Arc;

    #[test]
    fn insert_then_reopen_then_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ReplayStore::open(dir.path()).unwrap();
        store.insert("img_a", "prompt_a", "gpt-4-vision", "depth 0.3 meters").unwrap();
        assert_eq!(store.len(), 1);

        let reopened = ReplayStore::open(dir.path()).unwrap();
        assert_eq!(reopened.len(), 1);
        // direct lookup through the provider API: this image hash will not
        // match img_a, so the lookup must miss
        let image = prepare_image(&tiny_png(0), usize::MAX).unwrap();
        let req = CompletionRequest {
            model_id: "gpt-4-vision",
            prompt_text: "",
            prompt_hash: "prompt_a",
            image: &image,
            temperature: 0.0,
            max_output_tokens: 16,
        };
        assert!(matches!(
            reopened.complete(&req),
            Err(ProviderError::MissingFixture { .. })
        ));
    }

    #[test]
    fn replay_roundtrip_through_client() {
        let dir = tempfile::tempdir().unwrap();
        let image_bytes = tiny_png(9);
        let prepared = prepare_image(&image_bytes, usize::MAX).unwrap();
        let prompt = build_prompt_named("appendix1").unwrap();

        let mut store = ReplayStore::open(dir.path()).unwrap();
        store
            .insert(&prepared.hash, prompt.checksum(), "gpt-4-vision", "fixture text")
            .unwrap();

        let client = LmmClient::with_provider(
            Arc::new(ReplayStore::open(dir.path()).unwrap()),
            ModelConfig::default(),
            None,
        )
        .unwrap();
        let exchange = client.estimate_raw(&image_bytes, &prompt).unwrap();
        assert_eq!(exchange.response_text, "fixture text");
        assert!(exchange.from_cache, "replay lookups count as cached");

        // identical key, identical bytes
        let again = client.estimate_raw(&image_bytes, &prompt).unwrap();
        assert_eq!(again.response_text, exchange.response_text);
    }

    #[test]
    fn missing_fixture_is_a_dedicated_error() {
        let dir = tempfile::tempdir().unwrap();
        let client = LmmClient::with_provider(
            Arc::new(ReplayStore::open(dir.path()).unwrap()),
            ModelConfig::default(),
            None,
        )
        .unwrap();
        let prompt = build_prompt_named("appendix1").unwrap();
        let err = client.estimate_raw(&tiny_png(7), &prompt).unwrap_err();
        assert!(matches!(err, super::super::LmmError::MissingFixture { .. }));
    }

    #[test]
    fn reinserting_a_key_replaces_the_response() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ReplayStore::open(dir.path()).unwrap();
        store.insert("i", "p", "m", "first").unwrap();
        store.insert("i", "p", "m", "second").unwrap();
        assert_eq!(store.len(), 1);
        let reopened = ReplayStore::open(dir.path()).unwrap();
        assert_eq!(
            reopened.responses[&("i".into(), "p".into(), "m".into())],
            "second"
        );
    }
}
