mod commands;
mod error;

use std::path::PathBuf;

use bifluxon_core::fit::ModelKind;
use bifluxon_core::formats::SpectrumModel;
use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bifluxon",
    version,
    about = "Heavy-fluxonium spectra, fits and coherence budgets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transition frequencies f_0j over a flux range, as a CSV table.
    Spectrum {
        #[arg(long)]
        params: PathBuf,
        /// START:STOP:COUNT in Φ0.
        #[arg(long)]
        flux: String,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value = "exact", value_parser = parse_spectrum_model)]
        model: SpectrumModel,
        #[arg(long)]
        out: PathBuf,
        /// Compute on a running service instead of locally.
        #[arg(long, value_name = "URL")]
        remote: Option<String>,
    },
    /// Fit model parameters to labeled transition points.
    Fit {
        #[arg(long)]
        points: PathBuf,
        /// Params file holding the initial guess.
        #[arg(long)]
        init: PathBuf,
        /// joint, dual-2amp or dual-1amp.
        #[arg(long, value_parser = parse_model_kind)]
        model: ModelKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_name = "URL")]
        remote: Option<String>,
    },
    /// Tunnelling gaps from the semiclassical formulas.
    Wkb {
        #[arg(long)]
        params: PathBuf,
    },
    /// Bloch bands of the Josephson junction and their Fourier amplitudes.
    Bands {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Quasicharge grid points on [−1/2, 1/2].
        #[arg(long, default_value_t = bifluxon_core::bloch::DEFAULT_GRID_SIZE)]
        grid: usize,
        /// Highest band index kept.
        #[arg(long, default_value_t = bifluxon_core::bloch::DEFAULT_S_MAX)]
        s_max: usize,
        /// Fourier harmonics per band.
        #[arg(long, default_value_t = bifluxon_core::bloch::DEFAULT_K_MAX)]
        k_max: usize,
    },
    /// Relaxation and dephasing budget over flux.
    Coherence {
        #[arg(long)]
        params: PathBuf,
        /// Noise file; defaults to the params file's noise block.
        #[arg(long)]
        noise: Option<PathBuf>,
        #[arg(long, default_value = "-0.5:0.5:21")]
        flux: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_name = "URL")]
        remote: Option<String>,
    },
    /// Serve the /api endpoints for the fit studio.
    Serve {
        /// Heatmap file.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, env = bifluxon_service::PORT_ENV, default_value_t = bifluxon_service::DEFAULT_PORT)]
        port: u16,
    },
}

fn parse_spectrum_model(s: &str) -> Result<SpectrumModel, String> {
    s.parse().map_err(|e: bifluxon_core::CoreError| e.to_string())
}

fn parse_model_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: bifluxon_core::CoreError| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum {
            params,
            flux,
            levels,
            model,
            out,
            remote,
        } => commands::spectrum(&params, &flux, levels, model, &out, remote.as_deref()),
        Command::Fit {
            points,
            init,
            model,
            out,
            remote,
        } => commands::fit(&points, &init, model, &out, remote.as_deref()),
        Command::Wkb { params } => commands::wkb(&params),
        Command::Bands {
            params,
            out,
            grid,
            s_max,
            k_max,
        } => commands::bands(&params, &out, grid, s_max, k_max),
        Command::Coherence {
            params,
            noise,
            flux,
            out,
            remote,
        } => commands::coherence(&params, noise.as_deref(), &flux, &out, remote.as_deref()),
        Command::Serve {
            data,
            points,
            params,
            port,
        } => commands::serve(data, points, params, port),
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
