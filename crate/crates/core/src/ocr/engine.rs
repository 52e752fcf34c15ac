//! OCR engines behind one adapter interface.
//!
//! `mock` is built in. Any other id maps to an external command configured in
//! `ocr_commands`: the crop is written as a PPM file, the command receives its
//! path (in place of `{crop}`, or appended), and must print
//! `<text> <confidence>` lines and exit with status 0.

use std::collections::BTreeMap;
use std::process::Command;
use std::sync::Arc;

use super::mock::read_glyphs;
use crate::error::{Error, Result};
use crate::ingest::Raster;
use crate::model::{tokens, OcrMethod, PipelineConfig};

/// Unfiltered engine output.
#[derive(Debug, Clone, PartialEq)]
pub struct RawReading {
    pub text: String,
    pub confidence: f64,
}

pub trait OcrEngine: Send + Sync {
    fn id(&self) -> &str;

    /// Recognizes text in one crop. An empty result means "read nothing".
    fn recognize(&self, crop: &Raster) -> Result<Vec<RawReading>>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MockOcr;

impl OcrEngine for MockOcr {
    fn id(&self) -> &str {
        "mock"
    }

    fn recognize(&self, crop: &Raster) -> Result<Vec<RawReading>> {
        Ok(read_glyphs(crop)
            .map(|(text, confidence)| RawReading { text, confidence })
            .into_iter()
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct CommandOcr {
    id: String,
    argv: Vec<String>,
}

impl CommandOcr {
    pub fn new(id: impl Into<String>, template: &str) -> Result<Self> {
        let id = id.into();
        let argv = tokens::split(template).map_err(|m| Error::Engine {
            engine: id.clone(),
            message: format!("bad command template: {m}"),
        })?;
        if argv.is_empty() {
            return Err(Error::Engine {
                engine: id,
                message: "empty command template".into(),
            });
        }
        Ok(CommandOcr { id, argv })
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Engine {
            engine: self.id.clone(),
            message: message.into(),
        }
    }
}

impl OcrEngine for CommandOcr {
    fn id(&self) -> &str {
        &self.id
    }

    fn recognize(&self, crop: &Raster) -> Result<Vec<RawReading>> {
        let file = tempfile::Builder::new()
            .prefix("pitchid-crop-")
            .suffix(".ppm")
            .tempfile()?;
        let mut bytes = Vec::new();
        crop.write_ppm(&mut bytes)?;
        std::fs::write(file.path(), bytes).map_err(|e| Error::path(file.path(), e))?;
        let path = file.path().to_string_lossy().into_owned();
        let mut args: Vec<String> = self.argv[1..]
            .iter()
            .map(|a| a.replace("{crop}", &path))
            .collect();
        if !self.argv.iter().any(|a| a.contains("{crop}")) {
            args.push(path);
        }
        let out = Command::new(&self.argv[0])
            .args(&args)
            .output()
            .map_err(|e| self.fail(format!("cannot start `{}`: {e}", self.argv[0])))?;
        if !out.status.success() {
            return Err(self.fail(format!(
                "exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let stdout = String::from_utf8_lossy(&out.stdout);
        let mut readings = Vec::new();
        for line in stdout.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (text, conf) = line
                .rsplit_once(char::is_whitespace)
                .ok_or_else(|| self.fail(format!("expected `<text> <confidence>`, got `{line}`")))?;
            let confidence = conf
                .parse::<f64>()
                .map_err(|_| self.fail(format!("bad confidence `{conf}`")))?;
            readings.push(RawReading {
                text: text.trim().to_string(),
                confidence,
            });
        }
        Ok(readings)
    }
}

/// Engines by id.
#[derive(Clone, Default)]
pub struct OcrRegistry {
    engines: BTreeMap<String, Arc<dyn OcrEngine>>,
}

impl std::fmt::Debug for OcrRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.engines.keys()).finish()
    }
}

impl OcrRegistry {
    /// The built-in mock plus every command in `config.ocr_commands`.
    pub fn from_config(config: &PipelineConfig) -> Result<Self> {
        let mut r = OcrRegistry::default();
        r.register(Arc::new(MockOcr));
        for (id, template) in &config.ocr_commands {
            r.register(Arc::new(CommandOcr::new(id.clone(), template)?));
        }
        Ok(r)
    }

    pub fn register(&mut self, engine: Arc<dyn OcrEngine>) {
        self.engines.insert(engine.id().to_string(), engine);
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn OcrEngine>> {
        self.engines
            .get(id)
            .cloned()
            .ok_or_else(|| Error::EngineMissing(id.to_string()))
    }

    pub fn for_method(&self, method: OcrMethod) -> Result<Arc<dyn OcrEngine>> {
        self.get(method.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unregistered_engine_is_missing() {
        let r = OcrRegistry::from_config(&PipelineConfig::default()).unwrap();
        assert!(matches!(r.get("foo"), Err(Error::EngineMissing(id)) if id == "foo"));
        assert!(matches!(
            r.for_method(OcrMethod::Paddle),
            Err(Error::EngineMissing(id)) if id == "paddle"
        ));
        assert_eq!(r.for_method(OcrMethod::Mock).unwrap().id(), "mock");
    }

    #[cfg(unix)]
    #[test]
    fn command_protocol() {
        let mut cfg = PipelineConfig::default();
        cfg.ocr_commands
            .insert("paddle".into(), "sh -c \"printf '7 0.9\\nAB 0.4\\n'; test -s $0\" {crop}".into());
        let r = OcrRegistry::from_config(&cfg).unwrap();
        let out = r
            .for_method(OcrMethod::Paddle)
            .unwrap()
            .recognize(&Raster::new(4, 4, [1, 2, 3]))
            .unwrap();
        assert_eq!(
            out,
            vec![
                RawReading { text: "7".into(), confidence: 0.9 },
                RawReading { text: "AB".into(), confidence: 0.4 },
            ]
        );
    }

    #[cfg(unix)]
    #[test]
    fn failing_command_is_an_engine_error() {
        let e = CommandOcr::new("easy", "false").unwrap();
        assert!(matches!(
            e.recognize(&Raster::new(1, 1, [0, 0, 0])),
            Err(Error::Engine { engine, .. }) if engine == "easy"
        ));
    }
}
