//! Monte-Carlo link simulation over coherence blocks and transmit powers.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SweepConfig;
use crate::channel::{complex_gaussian, derive_seed, draw_channel, rng_from_seed, ChannelMatrix};
use crate::constellation::{quantize, LabelMap, QpskVector};
use crate::error::{Error, Result};
use crate::ldpc::{decode, DecoderConfig, LdpcCode};
use crate::precoder::{build_lut, LookupTable, SolverOptions};
use crate::spatial::{
    build_codebook_labeled, select_subsets, spatial_decode_word, SubLut, SubsetCodebook,
};

const STREAM_CHANNEL: u64 = 1;
const STREAM_INFO: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_PILOT: u64 = 4;

const MIN_CROSSOVER: f64 = 1e-3;
const MAX_CROSSOVER: f64 = 0.45;

/// Error counters of one transmit-power point, summed over blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointCounts {
    /// Information bits after LDPC decoding.
    pub bits: u64,
    pub errors: u64,
    pub frames: u64,
    pub frame_errors: u64,
    /// Coded bits after spatial decoding, before LDPC decoding.
    pub raw_bits: u64,
    pub raw_errors: u64,
    pub unconverged: u64,
    pub channel_uses: u64,
}

impl PointCounts {
    fn add(&mut self, o: &PointCounts) {
        self.bits += o.bits;
        self.errors += o.errors;
        self.frames += o.frames;
        self.frame_errors += o.frame_errors;
        self.raw_bits += o.raw_bits;
        self.raw_errors += o.raw_errors;
        self.unconverged += o.unconverged;
        self.channel_uses += o.channel_uses;
    }

    pub fn ber(&self) -> f64 {
        ratio(self.errors, self.bits)
    }

    pub fn fer(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    pub fn raw_ber(&self) -> f64 {
        ratio(self.raw_errors, self.raw_bits)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// `√(P_tx / N)` for a transmit power in dB.
pub fn transmit_amplitude(ptx_db: f64, tx_antennas: usize) -> f64 {
    (10f64.powf(ptx_db / 10.0) / tx_antennas as f64).sqrt()
}

/// Per-block precoder and selection diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagnostics {
    pub block: usize,
    /// Mean `Φ` over the selected product set.
    pub mean_phi_selected: f64,
    /// Mean `Φ` over the full table.
    pub mean_phi_all: f64,
    pub infeasible_columns: usize,
    pub infeasible_selected: usize,
    pub solver_warnings: usize,
    /// Selected decimal values per user.
    pub selected: Vec<Vec<usize>>,
}

/// Outcome of one coherence block across all transmit powers.
#[derive(Debug, Clone)]
pub struct BlockOutcome {
    pub points: Vec<PointCounts>,
    pub diagnostics: BlockDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub ptx_db: f64,
    pub ber: f64,
    pub fer: f64,
    pub raw_ber: f64,
    #[serde(flatten)]
    pub counts: PointCounts,
    pub blocks: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub ldpc_n: usize,
    pub ldpc_k: usize,
    pub ldpc_rate: f64,
    pub sc_rates: Vec<f64>,
    pub codewords_per_block: usize,
    pub points: Vec<PointResult>,
    pub block_diagnostics: Vec<BlockDiagnostics>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl SweepResult {
    pub fn sc_rate(&self) -> f64 {
        self.config.sc_rate()
    }
}

/// Lookup table and codebooks of one coherence block.
#[derive(Debug, Clone)]
pub struct BlockSetup {
    pub channel: ChannelMatrix,
    pub lut: LookupTable,
    pub books: Vec<SubsetCodebook>,
}

impl BlockSetup {
    pub fn new(
        channel: ChannelMatrix,
        subset_sizes: &[usize],
        solver: &SolverOptions,
    ) -> Result<Self> {
        let lut = build_lut(&channel, solver)?;
        let books = select_subsets(&lut, subset_sizes)?;
        Ok(BlockSetup {
            channel,
            lut,
            books,
        })
    }

    /// Reorders every codebook by a relabeled constellation.
    pub fn relabel(&mut self, labels: LabelMap) -> Result<()> {
        for book in &mut self.books {
            *book = build_codebook_labeled(book.entries(), labels)?;
        }
        Ok(())
    }

    pub fn sub_lut(&self) -> Result<SubLut<'_>> {
        SubLut::new(&self.lut, &self.books)
    }

    fn diagnostics(&self, block: usize) -> Result<BlockDiagnostics> {
        let sub = self.sub_lut()?;
        let costs = self.lut.costs();
        Ok(BlockDiagnostics {
            block,
            mean_phi_selected: sub.mean_cost(),
            mean_phi_all: costs.iter().sum::<f64>() / costs.len() as f64,
            infeasible_columns: self.lut.infeasible_count(),
            infeasible_selected: sub.infeasible_count(),
            solver_warnings: self.lut.warning_count(),
            selected: self.books.iter().map(|b| b.decimals().to_vec()).collect(),
        })
    }
}

/// Noiseless scaled receive samples of every selected input, `H Q(x(s))`,
/// keyed by the positions of the per-user words.
struct ReceiveTable {
    users: usize,
    antennas: usize,
    widths: Vec<usize>,
    rows: Vec<Vec<Complex64>>,
}

impl ReceiveTable {
    fn new(setup: &BlockSetup) -> Result<Self> {
        let sub = setup.sub_lut()?;
        let widths: Vec<usize> = setup.books.iter().map(|b| b.width()).collect();
        let total: usize = widths.iter().sum();
        let mut rows = Vec::with_capacity(1 << total);
        for key in 0..1usize << total {
            let words = split_key(key, &widths);
            let parts: Vec<QpskVector> = setup
                .books
                .iter()
                .zip(&words)
                .map(|(b, &w)| b.codeword(w).clone())
                .collect();
            let s = QpskVector::concat(&parts);
            let (x, _) = sub.map_to_transmit(&s)?;
            let x_q = quantize(x.entries())?.values();
            rows.push(setup.channel.apply(&x_q));
        }
        Ok(ReceiveTable {
            users: setup.books.len(),
            antennas: setup.lut.antennas(),
            widths,
            rows,
        })
    }

    fn key(&self, words: &[usize]) -> usize {
        let mut key = 0;
        let mut shift = 0;
        for (w, &width) in words.iter().zip(&self.widths) {
            key |= w << shift;
            shift += width;
        }
        key
    }
}

fn split_key(mut key: usize, widths: &[usize]) -> Vec<usize> {
    widths
        .iter()
        .map(|&w| {
            let v = key & ((1 << w) - 1);
            key >>= w;
            v
        })
        .collect()
}

fn read_word(bits: &[u8], start: usize, width: usize) -> usize {
    (0..width).fold(0, |acc, i| {
        (acc << 1) | bits.get(start + i).copied().unwrap_or(0) as usize
    })
}

/// Runs the full chain for one block: build the lookup table, select the
/// subsets, then for every transmit power send LDPC-coded blocks and count
/// errors.
pub struct Simulator {
    cfg: SweepConfig,
    code: LdpcCode,
    solver: SolverOptions,
    codewords: usize,
}

impl Simulator {
    pub fn new(cfg: SweepConfig) -> Result<Self> {
        cfg.validate()?;
        let code = cfg.ldpc.build()?;
        if code.rank_deficiency() > 0 {
            log_warn(&format!(
                "parity-check matrix has {} dependent rows; k = {}",
                code.rank_deficiency(),
                code.k()
            ));
        }
        cfg.check_rates(code.rate())?;
        let solver = cfg.solver.options();
        let codewords = cfg.codewords_per_block(code.k());
        Ok(Simulator {
            cfg,
            code,
            solver,
            codewords,
        })
    }

    pub fn config(&self) -> &SweepConfig {
        &self.cfg
    }

    pub fn code(&self) -> &LdpcCode {
        &self.code
    }

    pub fn codewords_per_block(&self) -> usize {
        self.codewords
    }

    pub fn draw_block_channel(&self, block: usize) -> Result<ChannelMatrix> {
        draw_channel(
            self.cfg.users,
            self.cfg.antennas,
            self.cfg.tx_antennas,
            self.cfg.rho,
            derive_seed(self.cfg.seed, STREAM_CHANNEL, &[block as u64]),
        )
    }

    pub fn setup_block(&self, channel: ChannelMatrix) -> Result<BlockSetup> {
        let mut setup = BlockSetup::new(channel, &self.cfg.subset_sizes, &self.solver)?;
        if let Some(map) = self.cfg.label_map {
            setup.relabel(LabelMap::new(map)?)?;
        }
        Ok(setup)
    }

    /// Draws the block's channel and runs every transmit power on it.
    pub fn run_block(&self, block: usize) -> Result<BlockOutcome> {
        let setup = self.setup_block(self.draw_block_channel(block)?)?;
        self.run_block_with(block, &setup)
    }

    pub fn run_block_with(&self, block: usize, setup: &BlockSetup) -> Result<BlockOutcome> {
        let table = ReceiveTable::new(setup)?;
        let points = self
            .cfg
            .ptx_db
            .iter()
            .enumerate()
            .map(|(p, &db)| self.run_point(block, p, db, setup, &table))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockOutcome {
            points,
            diagnostics: setup.diagnostics(block)?,
        })
    }

    fn run_point(
        &self,
        block: usize,
        point: usize,
        ptx_db: f64,
        setup: &BlockSetup,
        table: &ReceiveTable,
    ) -> Result<PointCounts> {
        let cfg = &self.cfg;
        let (n, k) = (self.code.n(), self.code.k());
        let users = table.users;
        let amplitude = transmit_amplitude(ptx_db, cfg.tx_antennas);

        // LDPC-encode every user's information bits.
        let mut info = Vec::with_capacity(users);
        let mut coded = Vec::with_capacity(users);
        for m in 0..users {
            let mut rng = rng_from_seed(derive_seed(
                cfg.seed,
                STREAM_INFO,
                &[block as u64, point as u64, m as u64],
            ));
            let mut stream = Vec::with_capacity(self.codewords * n);
            let mut bits = Vec::with_capacity(self.codewords * k);
            for _ in 0..self.codewords {
                let word: Vec<u8> = (0..k).map(|_| rng.random::<bool>() as u8).collect();
                stream.extend(self.code.encode(&word)?);
                bits.push(word);
            }
            info.push(bits);
            coded.push(stream);
        }

        let mut noise_rng = rng_from_seed(derive_seed(
            cfg.seed,
            STREAM_NOISE,
            &[block as u64, point as u64],
        ));
        let received = transmit(table, setup, &coded, amplitude, &mut noise_rng);

        let crossover = if cfg.estimate_crossover {
            self.pilot_crossover(block, point, setup, table, amplitude)
        } else {
            cfg.crossover
        };
        let dec = DecoderConfig {
            max_iterations: cfg.bp_iters,
            crossover,
            early_stop: true,
        };

        let mut counts = PointCounts {
            channel_uses: received.uses as u64,
            ..Default::default()
        };
        for m in 0..users {
            let w = setup.books[m].width();
            // every coded bit rides on w-bit words; r_m·2K info bits per use
            let uses_m = coded[m].len() as f64 / w as f64;
            let per_use = (self.codewords * k) as f64 / uses_m;
            let expected = cfg.total_rate * 2.0 * cfg.antennas as f64;
            if (per_use - expected).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "user {}: {per_use} information bits per use, expected {expected}",
                    m + 1
                )));
            }

            counts.raw_bits += coded[m].len() as u64;
            counts.raw_errors += coded[m]
                .iter()
                .zip(&received.bits[m])
                .filter(|(a, b)| a != b)
                .count() as u64;
            for (c, truth) in info[m].iter().enumerate() {
                let out = decode(&received.bits[m][c * n..(c + 1) * n], &dec, &self.code);
                let errs = out
                    .info_bits
                    .iter()
                    .zip(truth)
                    .filter(|(a, b)| a != b)
                    .count();
                counts.bits += k as u64;
                counts.errors += errs as u64;
                counts.frames += 1;
                counts.frame_errors += (errs > 0) as u64;
                counts.unconverged += (!out.converged) as u64;
            }
        }
        Ok(counts)
    }

    /// Crossover estimate from uniformly random known words.
    fn pilot_crossover(
        &self,
        block: usize,
        point: usize,
        setup: &BlockSetup,
        table: &ReceiveTable,
        amplitude: f64,
    ) -> f64 {
        let mut rng = rng_from_seed(derive_seed(
            self.cfg.seed,
            STREAM_PILOT,
            &[block as u64, point as u64],
        ));
        let coded: Vec<Vec<u8>> = setup
            .books
            .iter()
            .map(|b| {
                (0..self.cfg.pilot_uses * b.width())
                    .map(|_| rng.random::<bool>() as u8)
                    .collect()
            })
            .collect();
        let rx = transmit(table, setup, &coded, amplitude, &mut rng);
        let (mut bits, mut errs) = (0usize, 0usize);
        for (tx, rx) in coded.iter().zip(&rx.bits) {
            bits += tx.len();
            errs += tx.iter().zip(rx).filter(|(a, b)| a != b).count();
        }
        (errs as f64 / bits.max(1) as f64).clamp(MIN_CROSSOVER, MAX_CROSSOVER)
    }
}

struct Received {
    bits: Vec<Vec<u8>>,
    uses: usize,
}

/// Spatially encodes each user's coded stream, sends it through the 1-bit
/// precoded channel and spatially decodes the quantized receive samples.
/// Streams are zero padded to a whole number of words; users with shorter
/// streams keep sending padding until the longest one is done.
fn transmit<R: Rng>(
    table: &ReceiveTable,
    setup: &BlockSetup,
    coded: &[Vec<u8>],
    amplitude: f64,
    noise: &mut R,
) -> Received {
    let users = table.users;
    let k = table.antennas;
    let uses = coded
        .iter()
        .zip(&table.widths)
        .map(|(c, &w)| c.len().div_ceil(w))
        .max()
        .unwrap_or(0);
    let mut out: Vec<Vec<u8>> = coded
        .iter()
        .map(|c| Vec::with_capacity(c.len() + 8))
        .collect();
    let mut words = vec![0usize; users];
    let mut y = vec![Complex64::new(0.0, 0.0); users * k];
    for t in 0..uses {
        for (m, w) in words.iter_mut().enumerate() {
            *w = read_word(&coded[m], t * table.widths[m], table.widths[m]);
        }
        let r = &table.rows[table.key(&words)];
        for (yi, ri) in y.iter_mut().zip(r) {
            *yi = ri * amplitude + complex_gaussian(noise);
        }
        let s_hat = quantize(&y).expect("finite receive samples");
        for (m, part) in s_hat.split(k).iter().enumerate() {
            let book = &setup.books[m];
            let word = spatial_decode_word(part, book);
            out[m].extend(book.word_bits(word));
        }
    }
    for (o, c) in out.iter_mut().zip(coded) {
        o.truncate(c.len());
    }
    Received { bits: out, uses }
}

fn log_warn(msg: &str) {
    eprintln!("warning: {msg}");
}

/// Runs every block (in parallel) and reduces the counts in block order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let start = Instant::now();
    let sim = Simulator::new(cfg.clone())?;
    let outcomes: Vec<BlockOutcome> = (0..cfg.blocks)
        .into_par_iter()
        .map(|b| sim.run_block(b))
        .collect::<Result<_>>()?;

    let mut totals = vec![PointCounts::default(); cfg.ptx_db.len()];
    let mut diagnostics = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        for (t, p) in totals.iter_mut().zip(&o.points) {
            t.add(p);
        }
        diagnostics.push(o.diagnostics);
    }
    let points = cfg
        .ptx_db
        .iter()
        .zip(totals)
        .map(|(&ptx_db, counts)| PointResult {
            ptx_db,
            ber: counts.ber(),
            fer: counts.fer(),
            raw_ber: counts.raw_ber(),
            counts,
            blocks: cfg.blocks,
        })
        .collect();
    Ok(SweepResult {
        config: cfg.clone(),
        ldpc_n: sim.code.n(),
        ldpc_k: sim.code.k(),
        ldpc_rate: sim.code.rate(),
        sc_rates: cfg.sc_rates(),
        codewords_per_block: sim.codewords,
        points,
        block_diagnostics: diagnostics,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_round_trip() {
        let widths = [2, 3];
        for key in 0..32 {
            let words = split_key(key, &widths);
            assert!(words[0] < 4 && words[1] < 8);
            assert_eq!(words[0] | words[1] << 2, key);
        }
    }

    #[test]
    fn word_reading_pads_with_zeros() {
        let bits = [1, 0, 1];
        assert_eq!(read_word(&bits, 0, 2), 2);
        assert_eq!(read_word(&bits, 2, 2), 2);
        assert_eq!(read_word(&bits, 4, 2), 0);
    }
}
