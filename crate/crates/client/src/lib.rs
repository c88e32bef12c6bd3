//! Blocking client for the service's `/api` endpoints.
//!
//! Not for use inside an async runtime; the underlying transport runs its own.

use bifluxon_core::fit::FitProblem;
use bifluxon_core::formats::{
    CoherenceFile, Document, FitProblemFile, FitResultFile, HeatmapFile, ParamsFile, PointsFile, SpectrumModel,
    SpectrumOverlay,
};
use bifluxon_service::ErrorBody;
use reqwest::blocking::{Client as Http, RequestBuilder};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server returned {status}: {}", body.error)]
    Api { status: StatusCode, body: ErrorBody },
    #[error("server returned {status} with unreadable body: {text}")]
    Unexpected { status: StatusCode, text: String },
}

impl ClientError {
    /// True for errors the server blamed on the request itself.
    pub fn is_rejection(&self) -> bool {
        matches!(self, ClientError::Api { status, .. } if *status == StatusCode::BAD_REQUEST)
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: Http,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8750`.
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            http: Http::builder().timeout(None).build().expect("client builds"),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        let resp = req.send()?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json()?);
        }
        let text = resp.text()?;
        match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => Err(ClientError::Api { status, body }),
            Err(_) => Err(ClientError::Unexpected { status, text }),
        }
    }

    pub fn heatmap(&self) -> Result<HeatmapFile> {
        self.send(self.http.get(self.url("/api/heatmap")))
    }

    /// Overlay polylines; `None` fields fall back to the server's defaults.
    pub fn spectrum(
        &self,
        params: Option<&ParamsFile>,
        flux: Option<&str>,
        levels: Option<usize>,
        model: Option<SpectrumModel>,
    ) -> Result<SpectrumOverlay> {
        let mut query: Vec<(&str, String)> = Vec::new();
        if let Some(p) = params {
            query.push(("params", p.to_canonical()));
        }
        if let Some(f) = flux {
            query.push(("flux", f.to_string()));
        }
        if let Some(k) = levels {
            query.push(("levels", k.to_string()));
        }
        if let Some(m) = model {
            query.push(("model", m.name().to_string()));
        }
        self.send(self.http.get(self.url("/api/spectrum")).query(&query))
    }

    pub fn points(&self) -> Result<PointsFile> {
        self.send(self.http.get(self.url("/api/points")))
    }

    pub fn put_points(&self, points: &PointsFile) -> Result<PointsFile> {
        self.send(
            self.http
                .put(self.url("/api/points"))
                .header("content-type", "application/json")
                .body(points.to_canonical()),
        )
    }

    pub fn fit(&self, problem: &FitProblem) -> Result<FitResultFile> {
        self.send(
            self.http
                .post(self.url("/api/fit"))
                .header("content-type", "application/json")
                .body(FitProblemFile::new(problem.clone()).to_canonical()),
        )
    }

    pub fn coherence(&self, params: Option<&ParamsFile>, flux: Option<&str>) -> Result<CoherenceFile> {
        let mut query: Vec<(&str, String)> = Vec::new();
        if let Some(p) = params {
            query.push(("params", p.to_canonical()));
        }
        if let Some(f) = flux {
            query.push(("flux", f.to_string()));
        }
        self.send(self.http.get(self.url("/api/coherence")).query(&query))
    }
}
