use anyhow::Result;
use deid_api::{AssessRequest, PipelineRequest, PipelineResponse, TransformRequest, TransformResponse};
use deid_client::Client;
use deid_core::risk::RiskResult;
use deid_core::synth::SyntheticConfig;

/// Where operations run: in this process, or on a deid service.
pub enum Backend {
    Local,
    Remote(Client),
}

async fn local<T: Send + 'static>(f: impl FnOnce() -> deid_core::Result<T> + Send + 'static) -> Result<T> {
    Ok(tokio::task::spawn_blocking(f).await??)
}

impl Backend {
    pub async fn assess(&self, req: AssessRequest) -> Result<RiskResult> {
        match self {
            Backend::Local => local(move || deid_api::assess(&req)).await,
            Backend::Remote(c) => Ok(c.assess(&req).await?),
        }
    }

    pub async fn transform(&self, req: TransformRequest) -> Result<TransformResponse> {
        match self {
            Backend::Local => local(move || deid_api::transform(&req)).await,
            Backend::Remote(c) => Ok(c.transform(&req).await?),
        }
    }

    pub async fn pipeline(&self, req: PipelineRequest) -> Result<PipelineResponse> {
        match self {
            Backend::Local => local(move || deid_api::run_pipeline(&req)).await,
            Backend::Remote(c) => Ok(c.pipeline(&req).await?),
        }
    }

    pub async fn synth(&self, config: SyntheticConfig) -> Result<String> {
        match self {
            Backend::Local => local(move || deid_api::synthesize(&config)).await,
            Backend::Remote(c) => Ok(c.synth(&config).await?),
        }
    }
}
