//! The three training stages and the pipeline that chains them.

mod guidance;
mod pipeline;
mod schedule;
mod stages;

pub use guidance::{ema_update, ema_update_in_place, guidance_logit_grads, guidance_loss, GuidanceLoss};
pub use pipeline::{
    run_after_stage1, run_pipeline, run_pipeline_with, run_stage1, Components, Observer,
    PipelineConfig, PipelineOutput, PreparedData, RunReport, Stage1Artifacts, StageEvent,
};
pub use schedule::{alpha, alpha_for_epoch, AlphaMode, EpochOrigin};
pub use stages::{
    stage1_pretrain, stage2_guidance, stage3_finetune, EpochLog, GuidanceConfig, Stage2Output,
    StageConfig, StageOutput,
};
