//! Command-line entry point: filter events, synthesize scenes, extract
//! trends, generate QA, mask audio, evaluate predictions, emit prompts.
//!
//! Logs go to standard error; each subcommand prints one machine-readable
//! JSON summary line to standard out and exits nonzero on any error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use spatialqa::config::PipelineConfig;
use spatialqa::error::Result;
use spatialqa::events::{filter_events, load_manifest_with, write_manifest, ManifestOptions};
use spatialqa::pipeline::{
    emit_prompts_run, evaluate_run, gen_qa_run, mask_run, synthesize, trends_run, MaskCliMode,
};

#[derive(Parser)]
#[command(
    name = "spatialqa",
    version,
    about = "Movement-centric spatial audio scene synthesis, QA generation, masking, and evaluation"
)]
struct Cli {
    /// TOML configuration file (defaults apply when omitted)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for scene batches (SPATIALQA_JOBS as fallback;
    /// 0 = automatic)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the duration/quality filters to a manifest
    FilterEvents {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Minimum event duration in seconds (config default: 3)
        #[arg(long)]
        min_duration: Option<f64>,
        /// Minimum quality score (config default: 0.45)
        #[arg(long)]
        min_score: Option<f64>,
        /// Accept manifests without a quality_score column and skip the
        /// score filter
        #[arg(long)]
        no_score_filter: bool,
    },
    /// Render scenes with ground-truth metadata (and optional oracle scores)
    Synthesize {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        scenes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write framewise oracle score files per (scene, label)
        #[arg(long)]
        emit_oracle_scores: bool,
    },
    /// Extract qualitative motion trends from scene metadata
    Trends {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate movement-reasoning QA items (JSONL)
    GenQa {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Apply query-conditioned temporal masking per question
    Mask {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        qa: PathBuf,
        /// no_mask | gt | scored
        #[arg(long)]
        mode: String,
        #[arg(long)]
        out: PathBuf,
        /// Score-file directory (defaults to <scenes>/scores)
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Mask at most this many questions per scene (0 = all)
        #[arg(long, default_value_t = 0)]
        max_per_scene: usize,
    },
    /// Score predictions and write the faceted accuracy report
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Print the accuracy table to stdout
        #[arg(long)]
        table: bool,
    },
    /// Emit generation or judge prompts as text files
    EmitPrompts {
        /// generation | thinking | rationale | open
        #[arg(long)]
        kind: String,
        #[arg(long)]
        scenes: Option<PathBuf>,
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn effective_jobs(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("SPATIALQA_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

fn run(cli: Cli) -> Result<()> {
    let config = PipelineConfig::load(cli.config.as_deref())?;
    let jobs = effective_jobs(cli.jobs);
    match cli.command {
        Command::FilterEvents {
            manifest,
            out,
            min_duration,
            min_score,
            no_score_filter,
        } => {
            let opts = ManifestOptions {
                require_score: !no_score_filter,
                verify_audio: true,
            };
            let pool = load_manifest_with(&manifest, &opts)?;
            let min_duration = min_duration.unwrap_or(config.events.min_duration_s);
            let min_score = if no_score_filter {
                0.0
            } else {
                min_score.unwrap_or(config.events.min_quality_score)
            };
            let kept = filter_events(&pool, min_duration, min_score);
            write_manifest(&kept, &out)?;
            println!(
                "{}",
                json!({
                    "command": "filter-events",
                    "input_events": pool.len(),
                    "kept_events": kept.len(),
                    "min_duration_s": min_duration,
                    "min_score": min_score,
                    "out": out,
                })
            );
        }
        Command::Synthesize {
            manifest,
            out,
            scenes,
            seed,
            emit_oracle_scores,
        } => {
            let pool = load_manifest_with(&manifest, &ManifestOptions::default())?;
            let summary = synthesize(&pool, &config, scenes, seed, &out, jobs, emit_oracle_scores)?;
            println!(
                "{}",
                json!({
                    "command": "synthesize",
                    "scenes": summary.scenes,
                    "score_files": summary.score_files,
                    "seed": seed,
                    "out": summary.out_dir,
                })
            );
        }
        Command::Trends { scenes, out } => {
            let n = trends_run(&scenes, &config, &out)?;
            println!(
                "{}",
                json!({ "command": "trends", "scenes": n, "out": out })
            );
        }
        Command::GenQa { scenes, out, seed } => {
            let summary = gen_qa_run(&scenes, &config, seed, &out)?;
            println!(
                "{}",
                json!({
                    "command": "gen-qa",
                    "scenes": summary.scenes,
                    "items": summary.items,
                    "waivers": summary.waivers,
                    "seed": seed,
                    "out": summary.out_path,
                })
            );
        }
        Command::Mask {
            scenes,
            qa,
            mode,
            out,
            scores,
            max_per_scene,
        } => {
            let mode: MaskCliMode = mode.parse()?;
            let summary = mask_run(
                &scenes,
                &qa,
                mode,
                &config,
                scores.as_deref(),
                &out,
                max_per_scene,
            )?;
            println!(
                "{}",
                json!({
                    "command": "mask",
                    "masked": summary.masked,
                    "unmasked": summary.unmasked,
                    "score_fallbacks": summary.score_fallbacks,
                    "out": summary.out_dir,
                })
            );
        }
        Command::Evaluate {
            gold,
            pred,
            scenes,
            out,
            table,
        } => {
            let report = evaluate_run(&gold, &pred, &scenes, &config, &out, table)?;
            println!(
                "{}",
                json!({
                    "command": "evaluate",
                    "conditions": report.conditions.len(),
                    "delta_cells": report.delta_interaction.len(),
                    "out": out,
                })
            );
        }
        Command::EmitPrompts {
            kind,
            scenes,
            gold,
            pred,
            out,
        } => {
            let summary = emit_prompts_run(
                &kind,
                scenes.as_deref(),
                gold.as_deref(),
                pred.as_deref(),
                &config,
                &out,
            )?;
            println!(
                "{}",
                json!({
                    "command": "emit-prompts",
                    "kind": kind,
                    "prompts": summary.prompts,
                    "out": summary.out_dir,
                })
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
