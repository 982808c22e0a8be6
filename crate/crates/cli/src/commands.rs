use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pldpch_core::codec::framing::{pack_msb, read_frame_bits, read_llrs, unpack_msb, write_frame_bits, write_llrs};
use pldpch_core::ga::{Checkpoint, GaConfig, PexitFitness, Search};
use pldpch_core::pexit::records::{append_run_log, write_thresholds, RunRecord, ThresholdRow};
use pldpch_core::pexit::{descend, layered_pexit_converges, ladder_db, Level, MiSampleConfig, PexitConfig};
use pldpch_core::sim::{append_csv, run_ber, write_json, BerConfig, Channel};
use pldpch_core::{CodeDesign, ConvCode, LlrFrame, PipelineDecoder, QcParityMatrix, LLR_SATURATION};

use crate::{DesignArg, Failure};

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct LiftArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArg,
    #[arg(long, default_value_t = 4)]
    pub z1: usize,
    #[arg(long, default_value_t = 16)]
    pub z2: usize,
    #[arg(long, env = "PLDPCH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output lift file.
    #[arg(long)]
    pub out: PathBuf,
}

/// A lift file, or parameters to draw one.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArg,
    /// Lift file written by `pldpch lift`.
    #[arg(long)]
    pub lift: Option<PathBuf>,
    /// Lifting factors and seed used when no lift file is given.
    #[arg(long, default_value_t = 4)]
    pub z1: usize,
    #[arg(long, default_value_t = 16)]
    pub z2: usize,
    #[arg(long, default_value_t = 0)]
    pub lift_seed: u64,
}

impl CodeArgs {
    fn build(&self) -> Result<(CodeDesign, ConvCode), Failure> {
        let design = self.design.load()?;
        let code = match &self.lift {
            Some(p) => ConvCode::from_lift(&design, QcParityMatrix::load(p)?)?,
            None => ConvCode::new(&design, self.z1, self.z2, self.lift_seed)?,
        };
        Ok((design, code))
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct EncodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,
    /// Packed information frames to encode; random frames when absent.
    #[arg(long)]
    pub info: Option<PathBuf>,
    /// Number of random frames.
    #[arg(long, default_value_t = 100)]
    pub frames: usize,
    #[arg(long, env = "PLDPCH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output bit stream (P then D per frame, MSB first).
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the information frames that were encoded.
    #[arg(long)]
    pub info_out: Option<PathBuf>,
    /// Also write channel LLRs (f32 little-endian) at this E_b/N_0.
    #[arg(long, allow_negative_numbers = true, requires = "llr_out")]
    pub ebn0_db: Option<f64>,
    #[arg(long, requires = "ebn0_db")]
    pub llr_out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// Packed hard bits as written by `encode`.
    Bits,
    /// Little-endian f32 LLRs.
    Llr,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DecodeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Llr)]
    pub format: InputFormat,
    /// Pipeline processors `I`.
    #[arg(long, default_value_t = 20)]
    pub processors: usize,
    /// Decoded information frames, packed MSB first.
    #[arg(long)]
    pub out: PathBuf,
    /// Information frames to count errors against.
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct PexitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArg,
    /// Coupling length `L`.
    #[arg(short = 'L', long = "coupling-length", default_value_t = 10)]
    pub coupling_length: usize,
    /// First rung of the descending ladder.
    #[arg(long, allow_negative_numbers = true, default_value_t = -0.30)]
    pub start_db: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step_db: f64,
    /// Maximum rungs (the ladder also stops at the first failure).
    #[arg(long, default_value_t = 100)]
    pub levels: usize,
    /// Evaluate exactly these points instead of a ladder.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub db: Vec<f64>,
    #[arg(long, default_value_t = 150)]
    pub max_iter: usize,
    /// Monte-Carlo samples per H-CN update.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, env = "PLDPCH_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Append every point to this JSON-lines log.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Write the threshold summary CSV.
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub design: DesignArg,
    /// TOML search configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Checkpoint written after every generation.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Continue from the checkpoint instead of starting afresh.
    #[arg(long)]
    pub resume: bool,
    /// Stop after this many generations in this invocation.
    #[arg(long)]
    pub generations: Option<usize>,
    /// Best split found, in design-file format.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-generation best/mean fitness CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub code: CodeArgs,
    /// E_b/N_0 grid in dB.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
    pub db: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub processors: usize,
    #[arg(long, default_value_t = 100)]
    pub min_errors: u64,
    #[arg(long, default_value_t = 100_000_000)]
    pub max_bits: u64,
    #[arg(long, env = "PLDPCH_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long, default_value = "sc-pldpch")]
    pub code_id: String,
    /// CSV log (appended).
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

pub fn lift(a: &LiftArgs) -> Result<(), Failure> {
    let design = a.design.load()?;
    let code = ConvCode::new(&design, a.z1, a.z2, a.seed)?;
    code.lift().save(&a.out)?;
    let h = code.lift();
    print!("lift {} x {}: {} H-CNs and {} P-VNs per frame, {} information bits", h.base_rows(), h.base_cols(), h.rows(), h.cols(), code.info_len());
    match code.lift_report() {
        Some(r) => println!(", girth {} after {} draws{}", r.girth, r.attempts, if r.met { "" } else { " (girth 6 not reached)" }),
        None => println!(),
    }
    Ok(())
}

fn read_info_frames(path: &PathBuf, len: usize) -> Result<Vec<Vec<u8>>, Failure> {
    let bytes = std::fs::read(path)?;
    let per = len.div_ceil(8);
    if bytes.len() % per != 0 {
        return Err(Failure::validation(format!("{} is not a whole number of {per}-byte frames", path.display())));
    }
    Ok(bytes.chunks(per).map(|c| unpack_msb(c, len)).collect())
}

pub fn encode(a: &EncodeArgs) -> Result<(), Failure> {
    let (_, code) = a.code.build()?;
    let frames = match &a.info {
        Some(p) => read_info_frames(p, code.info_len())?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..a.frames)
                .map(|_| (0..code.info_len()).map(|_| rng.random_range(0..2u8)).collect())
                .collect()
        }
    };
    let mut enc = pldpch_core::Encoder::new(&code);
    let mut out = BufWriter::new(File::create(&a.out)?);
    let mut info_out = a.info_out.as_ref().map(File::create).transpose()?.map(BufWriter::new);
    let mut llr_out = a.llr_out.as_ref().map(File::create).transpose()?.map(BufWriter::new);
    let channel = match a.ebn0_db {
        Some(db) => Some(Channel::new(code.info_len() as f64 / code.frame_len() as f64, db)?),
        None => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ 0x5eed_c4a1);
    for info in &frames {
        let (p, d) = enc.encode_step(info)?;
        write_frame_bits(&mut out, &p, &d)?;
        if let Some(w) = info_out.as_mut() {
            w.write_all(&pack_msb(info))?;
        }
        if let (Some(w), Some(ch)) = (llr_out.as_mut(), channel.as_ref()) {
            let mut bits = p;
            bits.extend_from_slice(&d);
            write_llrs(w, &ch.transmit(&bits, &mut rng))?;
        }
    }
    out.flush()?;
    if let Some(w) = info_out.as_mut() {
        w.flush()?;
    }
    if let Some(w) = llr_out.as_mut() {
        w.flush()?;
    }
    println!("encoded {} frames ({} information bits, {} coded bits each)", frames.len(), code.info_len(), code.frame_len());
    Ok(())
}

pub fn decode(a: &DecodeArgs) -> Result<(), Failure> {
    let (_, code) = a.code.build()?;
    let mut input = BufReader::new(File::open(&a.input)?);
    let mut pipe = PipelineDecoder::new(&code, a.processors)?;
    let mut decoded = Vec::new();
    let mut t = 0u64;
    loop {
        let llr = match a.format {
            InputFormat::Llr => read_llrs(&mut input, code.frame_len())?,
            InputFormat::Bits => read_frame_bits(&mut input, code.p_len(), code.d_len())?.map(|(p, d)| {
                p.iter()
                    .chain(&d)
                    .map(|&b| if b == 0 { LLR_SATURATION } else { -LLR_SATURATION })
                    .collect()
            }),
        };
        let Some(mut llr) = llr else { break };
        t += 1;
        let d = llr.split_off(code.p_len());
        decoded.extend(pipe.push(LlrFrame::new(&code, t, llr, d)?)?);
    }
    decoded.extend(pipe.finish());
    let mut out = BufWriter::new(File::create(&a.out)?);
    let infos: Vec<Vec<u8>> = decoded.iter().map(|f| code.info_of(&f.hard)).collect();
    for info in &infos {
        out.write_all(&pack_msb(info))?;
    }
    out.flush()?;
    print!("decoded {} frames with I = {}", infos.len(), a.processors);
    if let Some(r) = &a.reference {
        let reference = read_info_frames(r, code.info_len())?;
        if reference.len() != infos.len() {
            return Err(Failure::validation(format!("reference has {} frames, decoded {}", reference.len(), infos.len())));
        }
        let bits = infos.len() * code.info_len();
        let errors: usize = infos.iter().zip(&reference).map(|(x, y)| x.iter().zip(y).filter(|(a, b)| a != b).count()).sum();
        print!(": {errors} bit errors in {bits} bits");
    }
    println!();
    Ok(())
}

fn split_name(d: &DesignArg) -> String {
    match (&d.design, &d.fixture) {
        (Some(p), _) => p.display().to_string(),
        (None, Some(n)) => n.clone(),
        _ => String::new(),
    }
}

pub fn pexit(a: &PexitArgs) -> Result<(), Failure> {
    let design = a.design.load()?;
    let cfg = PexitConfig {
        max_iter: a.max_iter,
        step_db: a.step_db,
        sampling: MiSampleConfig {
            samples: a.samples,
            seed: a.seed,
        },
    };
    let levels: Vec<Level> = if a.db.is_empty() {
        descend(&design, a.coupling_length, a.start_db, &cfg, a.levels)?
    } else {
        a.db.iter()
            .map(|&db| {
                layered_pexit_converges(&design, a.coupling_length, db, &cfg).map(|outcome| Level { ebn0_db: db, outcome })
            })
            .collect::<pldpch_core::Result<_>>()?
    };

    let head: Vec<String> = levels.iter().map(|l| format!("{:>7.2}", l.ebn0_db)).collect();
    let its: Vec<String> = levels
        .iter()
        .map(|l| if l.outcome.converged { format!("{:>7}", l.outcome.iterations) } else { format!("{:>7}", "fail") })
        .collect();
    println!("E_b/N_0 (dB) {}", head.join(""));
    println!("N_it         {}", its.join(""));

    let threshold = if a.db.is_empty() {
        match levels.iter().position(|l| !l.outcome.converged) {
            Some(0) => None,
            Some(k) => Some(ladder_db(levels[k].ebn0_db, -a.step_db, 1)),
            None => levels.last().map(|l| l.ebn0_db),
        }
    } else {
        None
    };
    match threshold {
        Some(t) => println!("threshold {t:.2} dB (L = {}, N_max = {})", a.coupling_length, a.max_iter),
        None if a.db.is_empty() => println!("no convergence at the start point {:.2} dB", a.start_db),
        None => {}
    }

    let name = split_name(&a.design);
    if let Some(p) = &a.log {
        let recs: Vec<RunRecord> = levels
            .iter()
            .map(|l| RunRecord {
                split_file: name.clone(),
                width: design.split.width(),
                coupling_length: a.coupling_length,
                ebn0_db: l.ebn0_db,
                converged: l.outcome.converged,
                iterations: l.outcome.iterations,
            })
            .collect();
        append_run_log(p, &recs)?;
    }
    if let (Some(p), Some(t)) = (&a.thresholds, threshold) {
        write_thresholds(
            p,
            &[ThresholdRow {
                split_file: name,
                width: design.split.width(),
                coupling_length: a.coupling_length,
                start_db: a.start_db,
                threshold_db: t,
                max_iter: a.max_iter,
                samples: a.samples,
                seed: a.seed,
            }],
        )?;
    }
    Ok(())
}

pub fn ga(a: &GaArgs) -> Result<(), Failure> {
    let design = a.design.load()?;
    let text = std::fs::read_to_string(&a.config)?;
    let cfg = GaConfig::from_toml(&text)?;
    let mut search = if a.resume {
        let ck = Checkpoint::load(&a.checkpoint)?;
        if ck.config != cfg || ck.population.first().map(|s| s.base()) != Some(design.split.base()) {
            return Err(Failure::validation("checkpoint does not match the configuration or base"));
        }
        Search::resume(ck)?
    } else {
        Search::new(design.split.base(), design.order, &cfg)?
    };
    let fitness = PexitFitness::new(design.order, &cfg);
    let budget = a.generations.unwrap_or(usize::MAX);
    let mut done = 0;
    while !search.is_done() && done < budget {
        let st = search.step(&fitness)?;
        search.checkpoint().save(&a.checkpoint)?;
        println!("generation {:>4}: best {:>6}, mean {:>9.2}", st.generation, st.best, st.mean);
        done += 1;
    }
    let ck = search.checkpoint();
    if let Some(p) = &a.log {
        let mut w = BufWriter::new(File::create(p)?);
        writeln!(w, "generation,best,mean")?;
        for s in &ck.log {
            writeln!(w, "{},{},{}", s.generation, s.best, s.mean)?;
        }
        w.flush()?;
    }
    match &ck.best {
        Some((split, f)) => {
            CodeDesign::new(design.order, split.clone()).save(&a.out)?;
            println!("best fitness {f}");
        }
        None => println!("no generation evaluated"),
    }
    Ok(())
}

pub fn ber(a: &BerArgs) -> Result<(), Failure> {
    let (_, code) = a.code.build()?;
    let cfg = BerConfig {
        processors: a.processors,
        ebn0_db: a.db.clone(),
        min_bit_errors: a.min_errors,
        max_bits: a.max_bits,
        seed: a.seed,
        noiseless: a.noiseless,
    };
    let recs = run_ber(&code, &a.code_id, &cfg)?;
    for r in &recs {
        println!(
            "{:>7.2} dB  bits {:>11}  errors {:>6}  BER {:.3e}{}",
            r.ebn0_db,
            r.bits,
            r.bit_errors,
            r.ber,
            if r.upper_bound { " (no errors)" } else { "" }
        );
    }
    append_csv(&a.csv, &recs)?;
    if let Some(p) = &a.json {
        write_json(p, &recs)?;
    }
    Ok(())
}
