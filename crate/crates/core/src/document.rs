//! Versioned JSON documents for fitted pipelines, trained models and metric
//! reports. Each file is an envelope naming its kind and format version
//! around the payload, so a reload can refuse a file it does not understand.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    kind: String,
    version: u32,
    body: T,
}

/// Things that can be written as a versioned document.
pub trait Documented: Serialize + DeserializeOwned {
    const KIND: &'static str;

    fn to_document(&self) -> Result<String> {
        let envelope = Envelope {
            kind: Self::KIND.to_owned(),
            version: FORMAT_VERSION,
            body: self,
        };
        let mut text =
            serde_json::to_string_pretty(&envelope).map_err(|e| Error::Document(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    fn from_document(text: &str) -> Result<Self> {
        let envelope: Envelope<serde_json::Value> =
            serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        if envelope.kind != Self::KIND {
            return Err(Error::Document(format!(
                "expected a `{}` document, found `{}`",
                Self::KIND,
                envelope.kind
            )));
        }
        if envelope.version != FORMAT_VERSION {
            return Err(Error::Document(format!(
                "unsupported {} document version {}",
                Self::KIND,
                envelope.version
            )));
        }
        serde_json::from_value(envelope.body).map_err(|e| Error::Document(e.to_string()))
    }

    fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_document()?).map_err(|e| Error::io(path, e))
    }

    fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_document(&text)
    }
}
