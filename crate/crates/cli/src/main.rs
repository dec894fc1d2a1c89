//! Command-line frontend: synthesize fields, inspect spectra and Galerkin
//! tables, build image pairs, run single estimations, and drive the full
//! benchmark sweep. Fields travel as F64GRID files, images additionally as
//! 16-bit PGM; see the README for the formats and the bench config schema.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fbmflow::bench::{emit_plots, emit_vorticity_maps, run_benchmark, BenchConfig};
use fbmflow::connection::{build_f_discrete, build_f_paper, TableMode};
use fbmflow::estimator::{estimate, EstimateOptions, Method};
use fbmflow::fbm::{self, FbmParams};
use fbmflow::imaging::{make_pair, synth_texture, ImagePair, Texture};
use fbmflow::io::{self, Layout};
use fbmflow::metrics::fit_spectrum;
use fbmflow::spectral::radial_spectrum;
use fbmflow::{FilterBank, ScalarGrid};

#[derive(Parser)]
#[command(
    name = "fbmflow",
    version,
    about = "divergence-free self-similar fields and incompressible motion estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a divergence-free self-similar random field.
    SynthFbm {
        /// Grid side, a power of two.
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Regularity exponent in (0, 1].
        #[arg(long)]
        hurst: f64,
        /// Field amplitude.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Wavelet family: haar, db4, db8, coif4, coif10.
        #[arg(long, default_value = "coif10")]
        filter: String,
        /// Output field (F64GRID, two components).
        #[arg(long)]
        out: PathBuf,
    },

    /// Radial energy spectrum of a vector field, with a log-log line fit.
    Spectrum {
        /// Input field (F64GRID, two components).
        #[arg(long = "in")]
        input: PathBuf,
        /// Output CSV: shell index, energy, and their natural logs.
        #[arg(long)]
        out: PathBuf,
        /// Lowest shell of the fit window.
        #[arg(long, default_value_t = 10)]
        kappa_min: usize,
        /// Highest shell of the fit window; 0 means n/2.
        #[arg(long, default_value_t = 0)]
        kappa_max: usize,
    },

    /// Galerkin matrix of a fractional Laplacian in the wavelet basis.
    Connection {
        /// Operator exponent; the matrix represents (-Lap)^alpha.
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "coif10")]
        filter: String,
        /// Dyadic resolution level; the matrix has 2^sn rows.
        #[arg(long)]
        sn: u32,
        /// Construction route: "discrete" or "paper".
        #[arg(long, default_value = "discrete")]
        mode: String,
        /// Output matrix (F64GRID, connection layout).
        #[arg(long)]
        out: PathBuf,
    },

    /// Build an observed image pair from a known motion field.
    MakePair {
        /// Ground-truth field (F64GRID, two components).
        #[arg(long)]
        field: PathBuf,
        /// Template content: "bandpass" or "particles".
        #[arg(long, default_value = "bandpass")]
        texture: String,
        /// Noise target for the warped frame, dB; "inf" for noise-free.
        #[arg(long, default_value_t = 33.2)]
        psnr0: f64,
        /// Noise target for the template frame, dB.
        #[arg(long, default_value_t = 33.5)]
        psnr1: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Writes <prefix>_y0 and <prefix>_y1 as .f64 and .pgm.
        #[arg(long)]
        out_prefix: String,
    },

    /// Estimate the motion between two frames.
    Estimate {
        /// Observed warped frame (.f64 plain grid or .pgm).
        #[arg(long)]
        y0: PathBuf,
        /// Observed template frame (.f64 plain grid or .pgm).
        #[arg(long)]
        y1: PathBuf,
        /// Regularizer: a..e or a long name (e.g. "spectral-prior").
        #[arg(long)]
        method: String,
        /// Prior regularity exponent (ignored by methods a and b).
        #[arg(long, default_value_t = 0.5)]
        hurst: f64,
        /// Regularization weight.
        #[arg(long)]
        reg: f64,
        #[arg(long, default_value = "coif10")]
        filter: String,
        /// Finest dyadic level to optimize; omit for full resolution.
        #[arg(long)]
        levels: Option<usize>,
        /// Method-e table construction: "discrete" or "paper".
        #[arg(long, default_value = "discrete")]
        e_mode: String,
        /// Method-e variant separating integer orders from the remainder.
        #[arg(long)]
        split: bool,
        /// Output displacement field (F64GRID, two components).
        #[arg(long)]
        out: PathBuf,
        /// Optional per-iteration objective trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },

    /// Run the full benchmark sweep described by a JSON config.
    Bench {
        /// Config file; missing keys take defaults. See the README schema.
        #[arg(long, required_unless_present = "dump_default")]
        config: Option<PathBuf>,
        /// Report CSV path.
        #[arg(long, required_unless_present = "dump_default")]
        out: Option<PathBuf>,
        /// Also write spectrum plots and vorticity maps into this directory.
        #[arg(long)]
        plots: Option<PathBuf>,
        /// Print the default config as JSON and exit.
        #[arg(long)]
        dump_default: bool,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::SynthFbm { n, hurst, sigma, seed, filter, out } => {
            let fb = FilterBank::by_name(&filter)?;
            let params = FbmParams::new(hurst, sigma, seed)?;
            let u = fbm::sample_field(&params, n, &fb)?;
            io::write_vector(&out, &u, Layout::Plain)?;
            println!("wrote {} ({}x{}, two components)", out.display(), n, n);
        }

        Command::Spectrum { input, out, kappa_min, kappa_max } => {
            let (u, layout) = io::read_vector(&input)?;
            if layout != Layout::Plain {
                bail!("{} holds {:?} data, expected plain samples", input.display(), layout);
            }
            let n = u.n();
            let bins = n / 2;
            let spectrum = radial_spectrum(&u, bins)?;
            let kappa_max = if kappa_max == 0 { n / 2 } else { kappa_max };
            let fit = fit_spectrum(&spectrum, kappa_min, kappa_max)?;
            let mut csv = String::new();
            csv.push_str(&format!(
                "# fit window [{kappa_min}, {kappa_max}]: slope {} intercept_ln {}\n",
                fit.slope, fit.intercept_ln
            ));
            csv.push_str("kappa,energy,ln_kappa,ln_energy\n");
            for (i, &e) in spectrum.iter().enumerate() {
                let kappa = i + 1;
                let (lk, le) = if e > 0.0 {
                    ((kappa as f64).ln().to_string(), e.ln().to_string())
                } else {
                    ((kappa as f64).ln().to_string(), "nan".into())
                };
                csv.push_str(&format!("{kappa},{e},{lk},{le}\n"));
            }
            fs::write(&out, csv).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "fitted slope {:.6} (regularity {:.6}), intercept_ln {:.6}",
                fit.slope,
                fit.hurst(),
                fit.intercept_ln
            );
        }

        Command::Connection { alpha, filter, sn, mode, out } => {
            let fb = FilterBank::by_name(&filter)?;
            let mat = match TableMode::parse(&mode)? {
                TableMode::Discrete => build_f_discrete(alpha, &fb, sn)?,
                TableMode::Paper => build_f_paper(alpha, &fb, sn)?,
            };
            mat.save(&out)?;
            println!("wrote {} ({n}x{n} matrix)", out.display(), n = mat.n());
        }

        Command::MakePair { field, texture, psnr0, psnr1, seed, out_prefix } => {
            let (u, layout) = io::read_vector(&field)?;
            if layout != Layout::Plain {
                bail!("{} holds {:?} data, expected plain samples", field.display(), layout);
            }
            let tex = synth_texture(Texture::parse(&texture)?, u.n(), seed)?;
            let pair = make_pair(&tex, &u, psnr0, psnr1, seed)?;
            for (tag, img, psnr) in [
                ("y0", pair.y0.samples(), pair.psnr0),
                ("y1", pair.y1.samples(), pair.psnr1),
            ] {
                let f64_path = PathBuf::from(format!("{out_prefix}_{tag}.f64"));
                let pgm_path = PathBuf::from(format!("{out_prefix}_{tag}.pgm"));
                io::write_scalar(&f64_path, img, Layout::Plain)?;
                let (lo, hi) = img.min_max();
                io::write_pgm16(&pgm_path, img, lo, hi.max(lo + f64::MIN_POSITIVE))?;
                println!("wrote {} and {} (achieved psnr {:.2} dB)", f64_path.display(), pgm_path.display(), psnr);
            }
        }

        Command::Estimate {
            y0,
            y1,
            method,
            hurst,
            reg,
            filter,
            levels,
            e_mode,
            split,
            out,
            trace,
        } => {
            let fb = FilterBank::by_name(&filter)?;
            let pair = ImagePair::from_images(&read_image(&y0)?, &read_image(&y1)?)?;
            let mut opts = EstimateOptions::new(Method::parse(&method)?, hurst, reg);
            opts.levels = levels;
            opts.e_mode = TableMode::parse(&e_mode)?;
            opts.split_mode = split;
            let res = estimate(&pair, &fb, &opts)?;
            io::write_vector(&out, &res.u, Layout::Plain)?;
            let iters: usize = res.levels.iter().map(|l| l.iterations).sum();
            println!(
                "method {} objective {:.6e} after {} iterations in {:.0} ms{}",
                opts.method.letter(),
                res.objective,
                iters,
                res.wall_ms,
                if res.stalled { " (line search stalled)" } else { "" }
            );
            println!("wrote {}", out.display());
            if let Some(path) = trace {
                let mut csv = String::from("level,step,objective\n");
                for lt in &res.levels {
                    for (step, obj) in lt.objective.iter().enumerate() {
                        csv.push_str(&format!("{},{},{}\n", lt.level, step, obj));
                    }
                }
                fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
                println!("wrote {}", path.display());
            }
        }

        Command::Bench { config, out, plots, dump_default } => {
            if dump_default {
                println!("{}", serde_json::to_string_pretty(&BenchConfig::default())?);
                return Ok(());
            }
            let (config, out) = (config.unwrap(), out.unwrap());
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg: BenchConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", config.display()))?;
            let report = run_benchmark(&cfg)?;
            fs::write(&out, report.to_csv())
                .with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} ({} rows)", out.display(), report.rows.len());
            if let Some(dir) = plots {
                emit_plots(&report, &dir)?;
                emit_vorticity_maps(&report, &dir)?;
                println!("wrote plots under {}", dir.display());
            }

            // per-group summary at the tuned weight
            println!("h       method  lambda      rmse_px   mbae_deg  sae");
            for &h in &cfg.hurst {
                for m in &cfg.methods {
                    let method = Method::parse(m)?;
                    let rows = report.best_rows(h, method);
                    if rows.is_empty() {
                        println!("{h:<7.4} {:<7} (no usable weight)", method.letter());
                        continue;
                    }
                    let mean = |f: fn(&fbmflow::bench::CaseRow) -> f64| {
                        rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64
                    };
                    println!(
                        "{h:<7.4} {:<7} {:<11.3e} {:<9.4} {:<9.4} {:<9.4}",
                        method.letter(),
                        rows[0].lambda,
                        mean(|r| r.rmse_px),
                        mean(|r| r.mbae_deg),
                        mean(|r| r.sae),
                    );
                }
            }
        }
    }
    Ok(())
}

/// Reads an image by extension: 16-bit PGM or a plain-layout F64GRID.
fn read_image(path: &Path) -> Result<ScalarGrid> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        Ok(io::read_pgm16(path)?)
    } else {
        let (img, layout) = io::read_scalar(path)?;
        if layout != Layout::Plain {
            bail!("{} holds {:?} data, expected plain samples", path.display(), layout);
        }
        Ok(img)
    }
}
