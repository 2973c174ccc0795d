//! Multi-photon Fock states at discrete frequency labels and their
//! scattering through a linear device.
//!
//! Because the device is frequency independent and linear, photons never
//! change frequency: each creation operator is replaced by
//! `a_mu^dag(w) -> sum_j S[j, mu] a_j^dag(w)` and photons at different
//! frequency labels scatter independently. Within one frequency block the
//! transition amplitude between occupation states is a permanent of a
//! sub-matrix of `S`.
//!
//! Amplitudes are stored against normalized occupation-number states, keyed
//! by the sorted multiset of `(frequency, mode)` slots. In this basis the
//! multiset multiplicity factor in the norm is one: `<psi|psi> = sum |c|^2`.
//! [`FockWavepacketState::wavefunction_amplitude`] converts to the
//! symmetrized amplitude over ordered photon tuples.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::device::UnitaryScatteringMatrix;
use crate::error::{Error, Result};
use crate::json::JsonComplex;
use crate::linalg::{CMatrix, C64};

/// One single-photon slot: frequency label index and mode index.
///
/// Ordered by frequency first so that a sorted multiset groups photons of
/// the same frequency together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub freq: usize,
    pub mode: usize,
}

/// Sorted multiset of occupied slots.
pub type Occupation = Vec<Slot>;

#[derive(Debug, Clone, PartialEq)]
pub struct FockWavepacketState {
    photon_count: usize,
    mode_count: usize,
    frequency_labels: Vec<f64>,
    amplitudes: BTreeMap<Occupation, C64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `prod_i n_i!` over the occupation numbers of a sorted multiset.
fn occupation_factorials(key: &[Slot]) -> f64 {
    let mut prod = 1.0;
    let mut run = 0;
    for (i, slot) in key.iter().enumerate() {
        run = if i > 0 && key[i - 1] == *slot { run + 1 } else { 1 };
        prod *= run as f64;
    }
    prod
}

impl FockWavepacketState {
    /// Builds a state from `(photons, amplitude)` terms, where each photon is
    /// `(mode, frequency)`. Repeated multisets are summed.
    pub fn new<P>(
        mode_count: usize,
        frequency_labels: Vec<f64>,
        terms: impl IntoIterator<Item = (P, C64)>,
    ) -> Result<Self>
    where
        P: AsRef<[(usize, f64)]>,
    {
        let mut labels = frequency_labels;
        labels.sort_by(f64::total_cmp);
        labels.dedup();
        if labels.iter().any(|f| !f.is_finite()) {
            return Err(Error::config("freq", "frequency labels must be finite"));
        }
        let mut state = FockWavepacketState {
            photon_count: 0,
            mode_count,
            frequency_labels: labels,
            amplitudes: BTreeMap::new(),
        };
        let mut count = None;
        for (photons, amp) in terms {
            let photons = photons.as_ref();
            match count {
                None => count = Some(photons.len()),
                Some(k) if k != photons.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        found: photons.len(),
                        context: "photon count of a term",
                    })
                }
                _ => {}
            }
            let mut key = photons
                .iter()
                .map(|&(mode, freq)| state.slot(mode, freq))
                .collect::<Result<Vec<_>>>()?;
            key.sort_unstable();
            *state.amplitudes.entry(key).or_default() += amp;
        }
        state.photon_count = count.unwrap_or(0);
        Ok(state)
    }

    /// `prod_l a^dag_{mode_l}(freq_l) |vac>`, normalized.
    pub fn product(mode_count: usize, photons: &[(usize, f64)]) -> Result<Self> {
        let labels = photons.iter().map(|p| p.1).collect();
        Self::new(mode_count, labels, [(photons, C64::new(1.0, 0.0))])
    }

    /// Vacuum (`K = 0`).
    pub fn vacuum(mode_count: usize) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(Vec::new(), C64::new(1.0, 0.0));
        FockWavepacketState {
            photon_count: 0,
            mode_count,
            frequency_labels: Vec::new(),
            amplitudes,
        }
    }

    fn freq_index(&self, freq: f64) -> Result<usize> {
        self.frequency_labels
            .iter()
            .position(|&f| f == freq)
            .ok_or(Error::UnknownFrequencyLabel(freq))
    }

    fn slot(&self, mode: usize, freq: f64) -> Result<Slot> {
        if mode >= self.mode_count {
            return Err(Error::IndexOutOfRange {
                index: mode,
                len: self.mode_count,
                context: "photon mode",
            });
        }
        Ok(Slot {
            freq: self.freq_index(freq)?,
            mode,
        })
    }

    pub fn photon_count(&self) -> usize {
        self.photon_count
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn frequency_labels(&self) -> &[f64] {
        &self.frequency_labels
    }

    pub fn amplitudes(&self) -> &BTreeMap<Occupation, C64> {
        &self.amplitudes
    }

    /// Iterates `(photons as (mode, freq), amplitude)`.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<(usize, f64)>, C64)> + '_ {
        self.amplitudes.iter().map(|(key, &amp)| {
            (
                key.iter()
                    .map(|s| (s.mode, self.frequency_labels[s.freq]))
                    .collect(),
                amp,
            )
        })
    }

    /// Occupation-basis amplitude of the multiset `photons`; zero when absent.
    pub fn amplitude(&self, photons: &[(usize, f64)]) -> Result<C64> {
        if photons.len() != self.photon_count {
            return Err(Error::DimensionMismatch {
                expected: self.photon_count,
                found: photons.len(),
                context: "query size vs photon count",
            });
        }
        let mut key = photons
            .iter()
            .map(|&(m, f)| self.slot(m, f))
            .collect::<Result<Vec<_>>>()?;
        key.sort_unstable();
        Ok(self.amplitudes.get(&key).copied().unwrap_or_default())
    }

    /// Symmetrized amplitude `psi(omega, mu)` of one ordered photon tuple, so
    /// that the state is `sum_tuples psi prod a^dag |vac>`.
    pub fn wavefunction_amplitude(&self, photons: &[(usize, f64)]) -> Result<C64> {
        let mut key = photons
            .iter()
            .map(|&(m, f)| self.slot(m, f))
            .collect::<Result<Vec<_>>>()?;
        key.sort_unstable();
        let amp = self.amplitude(photons)?;
        Ok(amp * occupation_factorials(&key).sqrt() / factorial(self.photon_count))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for z in self.amplitudes.values_mut() {
                *z /= n;
            }
        }
        self
    }

    /// Largest amplitude difference over the union of both supports.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let keys = self.amplitudes.keys().chain(other.amplitudes.keys());
        keys.map(|k| {
            let a = self.amplitudes.get(k).copied().unwrap_or_default();
            let b = other.amplitudes.get(k).copied().unwrap_or_default();
            (a - b).norm()
        })
        .fold(0.0, f64::max)
    }
}

/// Permanent by Ryser's formula, `O(2^k k^2)`.
pub fn permanent(m: &CMatrix) -> C64 {
    let k = m.nrows();
    debug_assert_eq!(k, m.ncols());
    if k == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut total = C64::new(0.0, 0.0);
    for subset in 1u64..(1 << k) {
        let mut prod = C64::new(1.0, 0.0);
        for r in 0..k {
            let row_sum: C64 = (0..k)
                .filter(|c| subset & (1 << c) != 0)
                .map(|c| m[(r, c)])
                .sum();
            prod *= row_sum;
        }
        let sign = if (k - subset.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += prod * sign;
    }
    total
}

/// All sorted mode multisets of size `k` drawn from `0..n`.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for m in start..n {
            cur.push(m);
            rec(n, k, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

fn mode_factorials(modes: &[usize]) -> f64 {
    let mut prod = 1.0;
    let mut run = 0;
    for i in 0..modes.len() {
        run = if i > 0 && modes[i - 1] == modes[i] { run + 1 } else { 1 };
        prod *= run as f64;
    }
    prod
}

/// Output distribution of one frequency block with sorted input modes.
fn scatter_block(s: &UnitaryScatteringMatrix, input: &[usize]) -> Vec<(Vec<usize>, C64)> {
    let k = input.len();
    let in_fact = mode_factorials(input);
    multisets(s.n_modes(), k)
        .into_iter()
        .filter_map(|output| {
            let sub = CMatrix::from_fn(k, k, |r, c| s.get(output[r], input[c]));
            let amp = permanent(&sub) / (in_fact * mode_factorials(&output)).sqrt();
            (amp != C64::new(0.0, 0.0)).then_some((output, amp))
        })
        .collect()
}

/// Applies the device's quantum scattering matrix to a Fock state.
pub fn scatter_state(
    input: &FockWavepacketState,
    s: &UnitaryScatteringMatrix,
) -> Result<FockWavepacketState> {
    if input.mode_count != s.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: input.mode_count,
            found: s.n_modes(),
            context: "state modes vs device modes",
        });
    }
    let mut cache: HashMap<Vec<usize>, Vec<(Vec<usize>, C64)>> = HashMap::new();
    let mut out: BTreeMap<Occupation, C64> = BTreeMap::new();
    for (key, &amp) in &input.amplitudes {
        // per-frequency blocks of the sorted key
        let mut partial: Vec<(Occupation, C64)> = vec![(Vec::new(), amp)];
        for block in key.chunk_by(|a, b| a.freq == b.freq) {
            let freq = block[0].freq;
            let modes: Vec<usize> = block.iter().map(|s| s.mode).collect();
            let dist = cache
                .entry(modes.clone())
                .or_insert_with(|| scatter_block(s, &modes));
            let mut next = Vec::with_capacity(partial.len() * dist.len());
            for (prefix, a) in &partial {
                for (modes_out, b) in dist.iter() {
                    let mut k = prefix.clone();
                    k.extend(modes_out.iter().map(|&mode| Slot { freq, mode }));
                    next.push((k, a * b));
                }
            }
            partial = next;
        }
        for (k, a) in partial {
            *out.entry(k).or_default() += a;
        }
    }
    Ok(FockWavepacketState {
        photon_count: input.photon_count,
        mode_count: input.mode_count,
        frequency_labels: input.frequency_labels.clone(),
        amplitudes: out,
    })
}

/// Output multiset `(mode, frequency)` whose detection probability is asked for.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceQuery(pub Vec<(usize, f64)>);

/// Probability of detecting exactly the photons in `q`.
pub fn coincidence_probability(output: &FockWavepacketState, q: &CoincidenceQuery) -> Result<f64> {
    Ok(output.amplitude(&q.0)?.norm_sqr())
}

/// One permutation's contribution to a position-domain matrix element.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationTerm {
    /// `permutation[l]` is the input photon paired with output photon `l`.
    pub permutation: Vec<usize>,
    pub coefficient: C64,
    /// Arguments of the delta functions, one per output photon.
    pub delta_offsets: Vec<f64>,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(k, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(k, &mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Expands `<vac| prod a_mu(x) S prod a^dag_mu'(x') |vac>` into a sum over
/// permutations of products of classical scattering amplitudes and delta
/// functions. Photons are given as `(position, mode)`.
pub fn position_matrix_element(
    s: &UnitaryScatteringMatrix,
    offsets: &[f64],
    out: &[(f64, usize)],
    input: &[(f64, usize)],
) -> Result<Vec<PermutationTerm>> {
    let n = s.n_modes();
    if offsets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: offsets.len(),
            context: "device offsets vs modes",
        });
    }
    if out.len() != input.len() {
        return Err(Error::DimensionMismatch {
            expected: out.len(),
            found: input.len(),
            context: "photon counts on both sides",
        });
    }
    for &(_, mode) in out.iter().chain(input) {
        if mode >= n {
            return Err(Error::IndexOutOfRange {
                index: mode,
                len: n,
                context: "photon mode",
            });
        }
    }
    Ok(permutations(out.len())
        .into_iter()
        .map(|perm| {
            let coefficient = out
                .iter()
                .zip(&perm)
                .map(|(&(_, mu), &p)| s.get(mu, input[p].1))
                .product();
            let delta_offsets = out
                .iter()
                .zip(&perm)
                .map(|(&(x, mu), &p)| {
                    let (xp, mup) = input[p];
                    (x - offsets[mu]) - (xp - offsets[mup])
                })
                .collect();
            PermutationTerm {
                permutation: perm,
                coefficient,
                delta_offsets,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonJson {
    pub mode: usize,
    pub freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub occupancy: Vec<usize>,
    pub amp: JsonComplex,
}

/// JSON form: `photons` is the table of single-photon slots and each term's
/// `occupancy[i]` counts photons in slot `i`. Modes are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockStateJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
    pub photons: Vec<PhotonJson>,
    pub terms: Vec<TermJson>,
}

impl FockStateJson {
    /// `default_modes` is used when the file does not declare `n_modes`.
    pub fn parse(&self, default_modes: Option<usize>) -> Result<FockWavepacketState> {
        let mode_count = self
            .n_modes
            .or(default_modes)
            .or_else(|| self.photons.iter().map(|p| p.mode + 1).max())
            .unwrap_or(1);
        let mut terms = Vec::with_capacity(self.terms.len());
        for (t, term) in self.terms.iter().enumerate() {
            if term.occupancy.len() != self.photons.len() {
                return Err(Error::config(
                    format!("terms[{t}].occupancy"),
                    format!(
                        "has {} entries but there are {} photon slots",
                        term.occupancy.len(),
                        self.photons.len()
                    ),
                ));
            }
            let photons: Vec<(usize, f64)> = term
                .occupancy
                .iter()
                .zip(&self.photons)
                .flat_map(|(&n, p)| std::iter::repeat_n((p.mode, p.freq), n))
                .collect();
            terms.push((photons, C64::from(term.amp)));
        }
        if terms.is_empty() {
            return Err(Error::config("terms", "state has no terms"));
        }
        let labels = self.photons.iter().map(|p| p.freq).collect();
        FockWavepacketState::new(mode_count, labels, terms)
    }
}

impl From<&FockWavepacketState> for FockStateJson {
    fn from(state: &FockWavepacketState) -> Self {
        let mut slots: Vec<Slot> = state.amplitudes.keys().flatten().copied().collect();
        slots.sort_unstable();
        slots.dedup();
        let photons = slots
            .iter()
            .map(|s| PhotonJson {
                mode: s.mode,
                freq: state.frequency_labels[s.freq],
            })
            .collect();
        let terms = state
            .amplitudes
            .iter()
            .map(|(key, &amp)| TermJson {
                occupancy: slots
                    .iter()
                    .map(|s| key.iter().filter(|k| *k == s).count())
                    .collect(),
                amp: amp.into(),
            })
            .collect();
        FockStateJson {
            n_modes: Some(state.mode_count),
            photons,
            terms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{beam_splitter, circulator, phase_shifter};
    use crate::linalg::c;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn permanent_small_cases() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(2., 0.), c(3., 0.), c(4., 0.)]);
        assert!((permanent(&m) - c(10., 0.)).norm() < 1e-14);
        let ones = CMatrix::from_element(3, 3, c(1., 0.));
        assert!((permanent(&ones) - c(6., 0.)).norm() < 1e-13);
        assert_eq!(permanent(&CMatrix::zeros(0, 0)), c(1., 0.));
    }

    #[test]
    fn single_photon_through_beam_splitter() {
        let (theta, phi) = (0.4, 1.3);
        let psi = FockWavepacketState::product(2, &[(0, 2.5)]).unwrap();
        let out = scatter_state(&psi, &beam_splitter(theta, phi)).unwrap();
        assert!((out.amplitude(&[(0, 2.5)]).unwrap() - c(theta.cos(), 0.)).norm() < 1e-14);
        let expected = -C64::from_polar(theta.sin(), -phi);
        assert!((out.amplitude(&[(1, 2.5)]).unwrap() - expected).norm() < 1e-14);
    }

    #[test]
    fn identity_leaves_state_alone() {
        let psi = FockWavepacketState::new(
            3,
            vec![0.0, 1.0],
            [
                (vec![(0, 0.0), (2, 1.0), (2, 1.0)], c(0.6, 0.0)),
                (vec![(1, 0.0), (1, 0.0), (0, 1.0)], c(0.0, 0.8)),
            ],
        )
        .unwrap();
        let out = scatter_state(&psi, &UnitaryScatteringMatrix::identity(3)).unwrap();
        assert!(out.max_abs_diff(&psi) < 1e-15);
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let psi = FockWavepacketState::product(2, &[(0, 1.0), (1, 1.0)]).unwrap();
        let out = scatter_state(&psi, &beam_splitter(FRAC_PI_4, 0.0)).unwrap();
        let p = |q: Vec<(usize, f64)>| coincidence_probability(&out, &CoincidenceQuery(q)).unwrap();
        assert!(p(vec![(0, 1.0), (1, 1.0)]) < 1e-15);
        assert!((p(vec![(0, 1.0), (0, 1.0)]) - 0.5).abs() < 1e-14);
        assert!((p(vec![(1, 1.0), (1, 1.0)]) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn distinct_frequencies_do_not_interfere() {
        let psi = FockWavepacketState::product(2, &[(0, 1.0), (1, 2.0)]).unwrap();
        let out = scatter_state(&psi, &beam_splitter(FRAC_PI_4, 0.0)).unwrap();
        let p = coincidence_probability(&out, &CoincidenceQuery(vec![(0, 1.0), (1, 2.0)])).unwrap();
        assert!((p - 0.25).abs() < 1e-14);
    }

    #[test]
    fn vacuum_and_phase_shifter() {
        let vac = FockWavepacketState::vacuum(1);
        let out = scatter_state(&vac, &phase_shifter(0.3)).unwrap();
        assert!((coincidence_probability(&out, &CoincidenceQuery(vec![])).unwrap() - 1.0).abs() < 1e-15);

        let one = FockWavepacketState::product(1, &[(0, -0.5)]).unwrap();
        let out = scatter_state(&one, &phase_shifter(0.3)).unwrap();
        let p = coincidence_probability(&out, &CoincidenceQuery(vec![(0, -0.5)])).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn query_errors() {
        let one = FockWavepacketState::product(2, &[(0, 1.0)]).unwrap();
        assert!(matches!(
            coincidence_probability(&one, &CoincidenceQuery(vec![(0, 7.0)])),
            Err(Error::UnknownFrequencyLabel(_))
        ));
        assert!(matches!(
            coincidence_probability(&one, &CoincidenceQuery(vec![(0, 1.0), (1, 1.0)])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            scatter_state(&one, &circulator()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn wavefunction_amplitude_accounts_for_bunching() {
        // |2> = (a^dag)^2 |0> / sqrt(2): psi(w, w) = 1/sqrt(2)
        let two = FockWavepacketState::product(1, &[(0, 0.0), (0, 0.0)]).unwrap();
        let psi = two.wavefunction_amplitude(&[(0, 0.0), (0, 0.0)]).unwrap();
        assert!((psi.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn position_terms() {
        let id = UnitaryScatteringMatrix::identity(1);
        let terms = position_matrix_element(&id, &[0.0], &[(1.5, 0)], &[(0.25, 0)]).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].coefficient, c(1., 0.));
        assert!((terms[0].delta_offsets[0] - 1.25).abs() < 1e-15);

        let (theta, phi) = (0.7, 0.2);
        let terms =
            position_matrix_element(&beam_splitter(theta, phi), &[0.0, 0.0], &[(2.0, 1)], &[(1.0, 0)]).unwrap();
        assert!((terms[0].coefficient + C64::from_polar(theta.sin(), -phi)).norm() < 1e-15);
        assert!((terms[0].delta_offsets[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circulator_two_photon_term() {
        // The displayed matrix sends input port 2 to output 1 and 3 to 2.
        let terms = position_matrix_element(
            &circulator(),
            &[0.0; 3],
            &[(0.0, 0), (0.0, 1)],
            &[(0.0, 1), (0.0, 2)],
        )
        .unwrap();
        let surviving: Vec<_> = terms.iter().filter(|t| t.coefficient.norm() > 0.0).collect();
        assert_eq!(surviving.len(), 1);
        assert_eq!(surviving[0].coefficient, c(1., 0.));
        assert_eq!(surviving[0].permutation, vec![0, 1]);
    }

    #[test]
    fn json_round_trip() {
        let psi = FockWavepacketState::new(
            2,
            vec![0.0, 1.0],
            [
                (vec![(0, 0.0), (0, 0.0)], c(0.6, 0.0)),
                (vec![(1, 1.0), (0, 0.0)], c(0.0, 0.8)),
            ],
        )
        .unwrap();
        let json = FockStateJson::from(&psi);
        let text = serde_json::to_string(&json).unwrap();
        let back: FockStateJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.parse(None).unwrap(), psi);
    }
}
