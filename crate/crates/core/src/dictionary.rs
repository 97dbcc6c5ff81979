//! Redundant dictionary over block space.
//!
//! The dictionary is the union of a cosine family, a sine family and one
//! family per pulse prototype (every fully interior translation of the
//! prototype). Global atom ids are 1-based and contiguous in that order:
//! cosines first, then sines, then the pulse families in prototype order.
//! Id 0 is never a valid atom; the index stream uses it as a block separator.
//!
//! Trigonometric atoms are evaluated from a shared cosine table rather than
//! stored, and inner products against both trigonometric families come out of
//! a single complex FFT of length `2 * trig_size`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Small-support shape whose translations form a pulse family.
///
/// Samples are kept as given; normalization to unit norm happens when a
/// dictionary is built, so a config round-tripped through a container header
/// rebuilds bit-identical atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeAtom {
    label: String,
    samples: Vec<f64>,
}

impl PrototypeAtom {
    pub fn new(label: impl Into<String>, samples: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if samples.is_empty() {
            return Err(Error::config(format!("prototype {label:?} is empty")));
        }
        if samples.len() > u16::MAX as usize {
            return Err(Error::config(format!(
                "prototype {label:?} support {} exceeds {}",
                samples.len(),
                u16::MAX
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::config(format!(
                "prototype {label:?} has non-finite samples"
            )));
        }
        if samples.iter().all(|&s| s == 0.0) {
            return Err(Error::config(format!(
                "prototype {label:?} has no nonzero sample"
            )));
        }
        Ok(PrototypeAtom { label, samples })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn support(&self) -> usize {
        self.samples.len()
    }

    /// Samples scaled to unit 2-norm.
    pub fn normalized(&self) -> Vec<f64> {
        let norm = l2_norm(&self.samples);
        self.samples.iter().map(|s| s / norm).collect()
    }

    /// Unit impulse, `[1, 1] / sqrt 2` and `[1, 2, 1] / sqrt 6`.
    pub fn default_set() -> Vec<PrototypeAtom> {
        vec![
            PrototypeAtom::new("p1", vec![1.0]).unwrap(),
            PrototypeAtom::new("p2", vec![1.0, 1.0]).unwrap(),
            PrototypeAtom::new("p3", vec![1.0, 2.0, 1.0]).unwrap(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryConfig {
    pub block_size: usize,
    pub trig_size: usize,
    pub prototypes: Vec<PrototypeAtom>,
}

impl DictionaryConfig {
    pub const DEFAULT_BLOCK_SIZE: usize = 2048;
    pub const DEFAULT_REDUNDANCY: usize = 2;
    /// Largest accepted `trig_size / block_size`.
    pub const MAX_REDUNDANCY: usize = 16;

    /// `trig_size = redundancy * block_size` with the default pulse prototypes.
    pub fn with_redundancy(block_size: usize, redundancy: usize) -> Self {
        DictionaryConfig {
            block_size,
            trig_size: block_size * redundancy,
            prototypes: PrototypeAtom::default_set(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size < 2 {
            return Err(Error::config(format!(
                "block_size must be at least 2, got {}",
                self.block_size
            )));
        }
        if self.block_size > u32::MAX as usize || self.trig_size > u32::MAX as usize / 4 {
            return Err(Error::config("dictionary geometry exceeds 32-bit range"));
        }
        if self.trig_size < self.block_size {
            return Err(Error::config(format!(
                "trig_size {} must be at least block_size {}",
                self.trig_size, self.block_size
            )));
        }
        if self.trig_size > Self::MAX_REDUNDANCY * self.block_size {
            return Err(Error::config(format!(
                "trig_size {} exceeds {} times block_size {}",
                self.trig_size,
                Self::MAX_REDUNDANCY,
                self.block_size
            )));
        }
        if self.prototypes.is_empty() {
            return Err(Error::config("at least one pulse prototype is required"));
        }
        if self.prototypes.len() > u8::MAX as usize {
            return Err(Error::config("at most 255 pulse prototypes are supported"));
        }
        for p in &self.prototypes {
            if p.support() > self.block_size {
                return Err(Error::config(format!(
                    "prototype {:?} support {} exceeds block_size {}",
                    p.label(),
                    p.support(),
                    self.block_size
                )));
            }
        }
        Ok(())
    }

    /// Number of atoms a dictionary built from this config holds.
    pub fn total_atoms(&self) -> usize {
        2 * self.trig_size
            + self
                .prototypes
                .iter()
                .map(|p| self.block_size - p.support() + 1)
                .sum::<usize>()
    }
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        DictionaryConfig::with_redundancy(Self::DEFAULT_BLOCK_SIZE, Self::DEFAULT_REDUNDANCY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigKind {
    Cosine,
    Sine,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyKind {
    Cosine,
    Sine,
    /// Translations of the prototype at this position in the config.
    Pulse {
        prototype: usize,
    },
    /// Atoms supplied explicitly through [`Dictionary::from_atoms`].
    Explicit,
}

/// Contiguous id range `first ..= first + len - 1` owned by one family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyDescriptor {
    pub kind: FamilyKind,
    pub first: u32,
    pub len: usize,
}

impl FamilyDescriptor {
    pub fn contains(&self, id: u32) -> bool {
        id >= self.first && ((id - self.first) as usize) < self.len
    }
}

/// A materialized family of atoms together with the per-atom factors that
/// brought each one to unit norm.
#[derive(Debug, Clone)]
pub struct AtomFamily {
    pub atoms: Vec<Vec<f64>>,
    pub normalizers: Vec<f64>,
}

/// Cosine table and FFT plan shared by the two trigonometric families.
struct TrigBank {
    trig_size: usize,
    // cos(pi * p / (2 * trig_size)) for p in 0..4 * trig_size
    table: Vec<f64>,
    cos_norm: Vec<f64>,
    sin_norm: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    // exp(-i pi k / (2 * trig_size)) for k in 0..=trig_size
    phase: Vec<Complex<f64>>,
}

impl TrigBank {
    fn new(block_size: usize, trig_size: usize) -> Self {
        let period = 4 * trig_size;
        let step = std::f64::consts::PI / (2 * trig_size) as f64;
        let table: Vec<f64> = (0..period).map(|p| (step * p as f64).cos()).collect();
        let phase = (0..=trig_size)
            .map(|k| Complex::from_polar(1.0, -step * k as f64))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(2 * trig_size);
        let mut bank = TrigBank {
            trig_size,
            table,
            cos_norm: Vec::new(),
            sin_norm: Vec::new(),
            fft,
            phase,
        };
        let mut scratch = vec![0.0; block_size];
        bank.cos_norm = (1..=trig_size)
            .map(|n| {
                bank.raw_atom(TrigKind::Cosine, n, &mut scratch);
                1.0 / l2_norm(&scratch)
            })
            .collect();
        bank.sin_norm = (1..=trig_size)
            .map(|n| {
                bank.raw_atom(TrigKind::Sine, n, &mut scratch);
                1.0 / l2_norm(&scratch)
            })
            .collect();
        bank
    }

    /// Table positions of successive samples of atom `n` (1-based).
    fn positions(&self, kind: TrigKind, n: usize) -> impl Iterator<Item = usize> {
        let period = 4 * self.trig_size;
        let (first, stride) = match kind {
            TrigKind::Cosine => ((n - 1) % period, (2 * (n - 1)) % period),
            // sin(x) = cos(x - pi/2)
            TrigKind::Sine => ((n + 3 * self.trig_size) % period, (2 * n) % period),
        };
        std::iter::successors(Some(first), move |&p| {
            let q = p + stride;
            Some(if q >= period { q - period } else { q })
        })
    }

    fn raw_atom(&self, kind: TrigKind, n: usize, out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(self.positions(kind, n)) {
            *o = self.table[p];
        }
    }

    fn normalizer(&self, kind: TrigKind, n: usize) -> f64 {
        match kind {
            TrigKind::Cosine => self.cos_norm[n - 1],
            TrigKind::Sine => self.sin_norm[n - 1],
        }
    }

    fn atom(&self, kind: TrigKind, n: usize, out: &mut [f64]) {
        let w = self.normalizer(kind, n);
        for (o, p) in out.iter_mut().zip(self.positions(kind, n)) {
            *o = w * self.table[p];
        }
    }

    fn add_scaled(&self, kind: TrigKind, n: usize, scale: f64, out: &mut [f64]) {
        let w = scale * self.normalizer(kind, n);
        for (o, p) in out.iter_mut().zip(self.positions(kind, n)) {
            *o += w * self.table[p];
        }
    }

    /// Writes cosine inner products to `cos_out` and sine ones to `sin_out`.
    fn correlate(&self, v: &[f64], cos_out: &mut [f64], sin_out: &mut [f64]) {
        let len = 2 * self.trig_size;
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        for (b, &x) in buf.iter_mut().zip(v) {
            b.re = x;
        }
        self.fft.process(&mut buf);
        for (k, c) in cos_out.iter_mut().enumerate() {
            *c = self.cos_norm[k] * (self.phase[k] * buf[k]).re;
        }
        for (k, s) in sin_out.iter_mut().enumerate() {
            let bin = k + 1;
            *s = -self.sin_norm[k] * (self.phase[bin] * buf[bin]).im;
        }
    }
}

struct PulseBank {
    unit: Vec<f64>,
    count: usize,
}

impl PulseBank {
    fn correlate(&self, v: &[f64], out: &mut [f64]) {
        for (start, o) in out.iter_mut().enumerate() {
            *o = dot(&self.unit, &v[start..start + self.unit.len()]);
        }
    }
}

enum Bank {
    Trig(TrigKind),
    Pulse(usize),
    Explicit,
}

/// Immutable indexed set of unit-norm atoms. Safe to share across threads.
pub struct Dictionary {
    block_size: usize,
    config: Option<DictionaryConfig>,
    families: Vec<FamilyDescriptor>,
    trig: Option<TrigBank>,
    pulses: Vec<PulseBank>,
    // Row-major explicit atoms.
    explicit: Vec<f64>,
    total: usize,
}

impl fmt::Debug for Dictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dictionary")
            .field("block_size", &self.block_size)
            .field("families", &self.families)
            .field("total", &self.total)
            .finish()
    }
}

impl Dictionary {
    pub fn new(config: DictionaryConfig) -> Result<Self> {
        config.validate()?;
        let block_size = config.block_size;
        let trig_size = config.trig_size;
        let trig = TrigBank::new(block_size, trig_size);

        let mut families = vec![
            FamilyDescriptor {
                kind: FamilyKind::Cosine,
                first: 1,
                len: trig_size,
            },
            FamilyDescriptor {
                kind: FamilyKind::Sine,
                first: 1 + trig_size as u32,
                len: trig_size,
            },
        ];
        let mut next = 1 + 2 * trig_size;
        let mut pulses = Vec::with_capacity(config.prototypes.len());
        for (p, proto) in config.prototypes.iter().enumerate() {
            let count = block_size - proto.support() + 1;
            families.push(FamilyDescriptor {
                kind: FamilyKind::Pulse { prototype: p },
                first: next as u32,
                len: count,
            });
            next += count;
            pulses.push(PulseBank {
                unit: proto.normalized(),
                count,
            });
        }
        let total = next - 1;
        if total > u32::MAX as usize {
            return Err(Error::config("dictionary has too many atoms"));
        }
        Ok(Dictionary {
            block_size,
            config: Some(config),
            families,
            trig: Some(trig),
            pulses,
            explicit: Vec::new(),
            total,
        })
    }

    /// Dictionary made of arbitrary atoms, each rescaled to unit norm.
    pub fn from_atoms(block_size: usize, atoms: &[Vec<f64>]) -> Result<Self> {
        if block_size < 1 {
            return Err(Error::config("block_size must be positive"));
        }
        if atoms.is_empty() {
            return Err(Error::config("explicit dictionary needs at least one atom"));
        }
        let mut explicit = Vec::with_capacity(atoms.len() * block_size);
        for (k, atom) in atoms.iter().enumerate() {
            if atom.len() != block_size {
                return Err(Error::Dimension {
                    expected: block_size,
                    found: atom.len(),
                });
            }
            let norm = l2_norm(atom);
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::config(format!(
                    "explicit atom {} has zero norm",
                    k + 1
                )));
            }
            explicit.extend(atom.iter().map(|x| x / norm));
        }
        Ok(Dictionary {
            block_size,
            config: None,
            families: vec![FamilyDescriptor {
                kind: FamilyKind::Explicit,
                first: 1,
                len: atoms.len(),
            }],
            trig: None,
            pulses: Vec::new(),
            explicit,
            total: atoms.len(),
        })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Number of atoms; valid ids are `1..=len()`.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn families(&self) -> &[FamilyDescriptor] {
        &self.families
    }

    /// The config this dictionary was built from; `None` for explicit atoms.
    pub fn config(&self) -> Option<&DictionaryConfig> {
        self.config.as_ref()
    }

    fn locate(&self, id: u32) -> Result<(Bank, usize)> {
        let family = self
            .families
            .iter()
            .find(|f| f.contains(id))
            .ok_or_else(|| Error::corrupt(0, format!("atom id {id} outside 1..={}", self.total)))?;
        let offset = (id - family.first) as usize;
        let bank = match family.kind {
            FamilyKind::Cosine => Bank::Trig(TrigKind::Cosine),
            FamilyKind::Sine => Bank::Trig(TrigKind::Sine),
            FamilyKind::Pulse { prototype } => Bank::Pulse(prototype),
            FamilyKind::Explicit => Bank::Explicit,
        };
        Ok((bank, offset))
    }

    pub fn atom(&self, id: u32) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.block_size];
        self.atom_into(id, &mut out)?;
        Ok(out)
    }

    pub fn atom_into(&self, id: u32, out: &mut [f64]) -> Result<()> {
        self.check_len(out.len())?;
        match self.locate(id)? {
            (Bank::Trig(kind), offset) => self.trig_bank().atom(kind, offset + 1, out),
            (Bank::Pulse(p), start) => {
                out.fill(0.0);
                let unit = &self.pulses[p].unit;
                out[start..start + unit.len()].copy_from_slice(unit);
            }
            (Bank::Explicit, row) => {
                let n = self.block_size;
                out.copy_from_slice(&self.explicit[row * n..(row + 1) * n]);
            }
        }
        Ok(())
    }

    /// `out += scale * d_id`.
    pub fn add_scaled_atom(&self, id: u32, scale: f64, out: &mut [f64]) -> Result<()> {
        self.check_len(out.len())?;
        match self.locate(id)? {
            (Bank::Trig(kind), offset) => self.trig_bank().add_scaled(kind, offset + 1, scale, out),
            (Bank::Pulse(p), start) => {
                let unit = &self.pulses[p].unit;
                for (o, u) in out[start..start + unit.len()].iter_mut().zip(unit) {
                    *o += scale * u;
                }
            }
            (Bank::Explicit, row) => {
                let n = self.block_size;
                for (o, a) in out.iter_mut().zip(&self.explicit[row * n..(row + 1) * n]) {
                    *o += scale * a;
                }
            }
        }
        Ok(())
    }

    /// Inner products `<d_n, v>` for every atom; entry `n - 1` holds atom `n`.
    pub fn correlate_all(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.total];
        self.correlate_into(v, &mut out)?;
        Ok(out)
    }

    /// Like [`correlate_all`](Self::correlate_all) but yields `None` for the
    /// excluded ids.
    pub fn correlate_excluding(&self, v: &[f64], excluded: &[u32]) -> Result<Vec<Option<f64>>> {
        let all = self.correlate_all(v)?;
        let mut out: Vec<Option<f64>> = all.into_iter().map(Some).collect();
        for &id in excluded {
            if id == 0 || id as usize > self.total {
                return Err(Error::input(format!("excluded id {id} out of range")));
            }
            out[id as usize - 1] = None;
        }
        Ok(out)
    }

    pub fn correlate_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_len(v.len())?;
        if out.len() != self.total {
            return Err(Error::Dimension {
                expected: self.total,
                found: out.len(),
            });
        }
        let mut rest = out;
        if let Some(trig) = &self.trig {
            let (cos_out, tail) = rest.split_at_mut(trig.trig_size);
            let (sin_out, tail) = tail.split_at_mut(trig.trig_size);
            trig.correlate(v, cos_out, sin_out);
            rest = tail;
        }
        for bank in &self.pulses {
            let (head, tail) = rest.split_at_mut(bank.count);
            bank.correlate(v, head);
            rest = tail;
        }
        if !self.explicit.is_empty() {
            let n = self.block_size;
            for (row, o) in rest.iter_mut().enumerate() {
                *o = dot(&self.explicit[row * n..(row + 1) * n], v);
            }
        }
        Ok(())
    }

    fn trig_bank(&self) -> &TrigBank {
        self.trig
            .as_ref()
            .expect("trigonometric family present whenever a trig id resolves")
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.block_size {
            return Err(Error::Dimension {
                expected: self.block_size,
                found: len,
            });
        }
        Ok(())
    }
}

/// Materializes one trigonometric family: `trig_size` atoms of length
/// `block_size`, atom `n` (1-based) sampled from
/// `cos(pi (2i - 1)(n - 1) / (2 trig_size))` or `sin(pi (2i - 1) n / (2 trig_size))`.
pub fn build_trig_family(
    block_size: usize,
    trig_size: usize,
    kind: TrigKind,
) -> Result<AtomFamily> {
    if block_size < 2 {
        return Err(Error::config("block_size must be at least 2"));
    }
    if trig_size < 1 {
        return Err(Error::config("trig_size must be positive"));
    }
    let bank = TrigBank::new(block_size, trig_size);
    let atoms = (1..=trig_size)
        .map(|n| {
            let mut a = vec![0.0; block_size];
            bank.atom(kind, n, &mut a);
            a
        })
        .collect();
    let normalizers = match kind {
        TrigKind::Cosine => bank.cos_norm,
        TrigKind::Sine => bank.sin_norm,
    };
    Ok(AtomFamily { atoms, normalizers })
}

/// Every fully interior translation of `prototype`, in increasing start order.
pub fn build_pulse_family(prototype: &PrototypeAtom, block_size: usize) -> Result<AtomFamily> {
    if prototype.support() > block_size {
        return Err(Error::config(format!(
            "prototype support {} exceeds block_size {block_size}",
            prototype.support()
        )));
    }
    let unit = prototype.normalized();
    let count = block_size - unit.len() + 1;
    let atoms = (0..count)
        .map(|start| {
            let mut a = vec![0.0; block_size];
            a[start..start + unit.len()].copy_from_slice(&unit);
            a
        })
        .collect();
    let factor = 1.0 / l2_norm(prototype.samples());
    Ok(AtomFamily {
        atoms,
        normalizers: vec![factor; count],
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
