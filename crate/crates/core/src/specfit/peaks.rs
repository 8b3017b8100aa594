//! Local-maximum detection with topographic prominence.

use super::lm::FitError;
use crate::spectrum::Spectrum;

/// One detected peak. `window` is the half-distance index range `[lo, hi)`
/// assigned after spacing selection; windows of adjacent peaks do not overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakCandidate {
    pub index: usize,
    pub location: f64,
    pub height: f64,
    pub prominence: f64,
    pub window: (usize, usize),
}

/// Detects local maxima of the transmission column by topographic prominence.
///
/// A peak's prominence is its height above the higher of the two lowest
/// saddles separating it from taller terrain (or the trace edge). Peaks
/// closer than `min_spacing` to a stronger peak are dropped; equal-prominence
/// ties keep the lower axis value. Result is sorted by location.
pub fn detect_peaks(
    spec: &Spectrum,
    min_prominence: f64,
    min_spacing: f64,
) -> Result<Vec<PeakCandidate>, FitError> {
    let values = spec
        .transmission()
        .ok_or(FitError::MissingInput("transmission column"))?;
    detect_peaks_in(spec.axis(), values, min_prominence, min_spacing)
}

/// Array-level peak detection; `axis` must be strictly increasing.
pub fn detect_peaks_in(
    axis: &[f64],
    values: &[f64],
    min_prominence: f64,
    min_spacing: f64,
) -> Result<Vec<PeakCandidate>, FitError> {
    if !(min_prominence > 0.0 && min_prominence <= 1.0) {
        return Err(FitError::InvalidProminence(min_prominence));
    }
    if axis.len() != values.len() {
        return Err(FitError::MismatchedLengths {
            axis: axis.len(),
            values: values.len(),
        });
    }
    let n = values.len();
    if n < 3 {
        return Ok(Vec::new());
    }

    // local maxima; plateaus count once at their left-middle sample
    let mut maxima = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                maxima.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }

    // topographic prominence per maximum
    let mut candidates: Vec<PeakCandidate> = maxima
        .into_iter()
        .filter_map(|peak| {
            let h = values[peak];
            let mut left_min = h;
            for k in (0..peak).rev() {
                if values[k] > h {
                    break;
                }
                left_min = left_min.min(values[k]);
            }
            let mut right_min = h;
            for &v in &values[peak + 1..] {
                if v > h {
                    break;
                }
                right_min = right_min.min(v);
            }
            let prominence = h - left_min.max(right_min);
            (prominence >= min_prominence).then(|| PeakCandidate {
                index: peak,
                location: axis[peak],
                height: h,
                prominence,
                window: (0, 0),
            })
        })
        .collect();

    // spacing selection: strongest first, lower axis value wins ties
    candidates.sort_by(|a, b| {
        b.prominence
            .partial_cmp(&a.prominence)
            .unwrap()
            .then(a.location.partial_cmp(&b.location).unwrap())
    });
    let mut kept: Vec<PeakCandidate> = Vec::new();
    for c in candidates {
        if kept
            .iter()
            .all(|k| (k.location - c.location).abs() >= min_spacing)
        {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());

    // non-overlapping half-distance windows
    let m = kept.len();
    for idx in 0..m {
        let lo = if idx == 0 {
            0
        } else {
            midpoint_index(axis, kept[idx - 1].index, kept[idx].index)
        };
        let hi = if idx + 1 == m {
            n
        } else {
            midpoint_index(axis, kept[idx].index, kept[idx + 1].index)
        };
        kept[idx].window = (lo, hi);
    }
    Ok(kept)
}

/// First sample index at or beyond the axis midpoint of two peaks.
fn midpoint_index(axis: &[f64], left: usize, right: usize) -> usize {
    let mid = 0.5 * (axis[left] + axis[right]);
    axis[left..=right]
        .iter()
        .position(|&x| x >= mid)
        .map_or(right, |off| left + off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::AxisKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lorentzian(x: f64, center: f64, fwhm: f64, amp: f64, base: f64) -> f64 {
        let h = fwhm / 2.0;
        base + amp * h * h / ((x - center).powi(2) + h * h)
    }

    #[test]
    fn single_lorentzian_single_candidate() {
        let axis: Vec<f64> = (0..401).map(|i| -2e9 + i as f64 * 1e7).collect();
        let t: Vec<f64> = axis
            .iter()
            .map(|&x| lorentzian(x, 3.3e8, 5e7, 0.6, 0.02))
            .collect();
        let spec = Spectrum::new(AxisKind::FrequencyHz, axis.clone(), Some(t), None).unwrap();
        let peaks = detect_peaks(&spec, 0.1, 0.0).unwrap();
        assert_eq!(peaks.len(), 1);
        // at the sample nearest the true center
        let nearest = axis
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - 3.3e8).abs().partial_cmp(&(b.1 - 3.3e8).abs()).unwrap()
            })
            .unwrap()
            .0;
        assert_eq!(peaks[0].index, nearest);
    }

    #[test]
    fn comb_of_ten_equal_lorentzians() {
        let fsr = 10.36e9;
        let step = 2e7;
        let axis: Vec<f64> = (0..6000).map(|i| i as f64 * step).collect();
        let t: Vec<f64> = axis
            .iter()
            .map(|&x| {
                (0..10)
                    .map(|k| lorentzian(x, 8e9 + k as f64 * fsr, 1.5e8, 0.5, 0.0))
                    .sum::<f64>()
                    + 0.01
            })
            .collect();
        let spec = Spectrum::new(AxisKind::FrequencyHz, axis, Some(t), None).unwrap();
        let peaks = detect_peaks(&spec, 0.1, 0.0).unwrap();
        assert_eq!(peaks.len(), 10);
        for pair in peaks.windows(2) {
            let spacing = pair[1].location - pair[0].location;
            assert!(
                (spacing - fsr).abs() <= step + 1e-3,
                "spacing {spacing} off from {fsr}"
            );
        }
        // windows tile without overlap
        for pair in peaks.windows(2) {
            assert!(pair[0].window.1 <= pair[1].window.0);
        }
    }

    #[test]
    fn noise_only_trace_yields_no_candidates() {
        let mut rejected = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let axis: Vec<f64> = (0..500).map(|i| i as f64).collect();
            let t: Vec<f64> = (0..500)
                .map(|_| 0.5 + 0.05 * rng.gen_range(-1.0..1.0f64))
                .collect();
            let peaks = detect_peaks_in(&axis, &t, 0.5, 0.0).unwrap();
            if peaks.is_empty() {
                rejected += 1;
            }
        }
        assert!(rejected >= 99, "only {rejected}/100 noise traces were clean");
    }

    #[test]
    fn baseline_shift_leaves_detection_unchanged() {
        let axis: Vec<f64> = (0..300).map(|i| i as f64).collect();
        let t: Vec<f64> = axis
            .iter()
            .map(|&x| lorentzian(x, 100.0, 12.0, 0.4, 0.0) + lorentzian(x, 220.0, 9.0, 0.3, 0.0))
            .collect();
        let shifted: Vec<f64> = t.iter().map(|v| v + 0.17).collect();
        let a = detect_peaks_in(&axis, &t, 0.1, 0.0).unwrap();
        let b = detect_peaks_in(&axis, &shifted, 0.1, 0.0).unwrap();
        assert_eq!(a.len(), b.len());
        for (pa, pb) in a.iter().zip(&b) {
            assert_eq!(pa.index, pb.index);
            assert!((pa.prominence - pb.prominence).abs() < 1e-12);
        }
    }

    #[test]
    fn min_spacing_keeps_stronger_peak() {
        let axis: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let t: Vec<f64> = axis
            .iter()
            .map(|&x| lorentzian(x, 90.0, 8.0, 0.5, 0.0) + lorentzian(x, 105.0, 8.0, 0.3, 0.0))
            .collect();
        let peaks = detect_peaks_in(&axis, &t, 0.05, 30.0).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].location - 90.0).abs() <= 2.0);
    }

    #[test]
    fn invalid_prominence_rejected() {
        let axis = [0.0, 1.0, 2.0];
        let vals = [0.0, 1.0, 0.0];
        assert!(matches!(
            detect_peaks_in(&axis, &vals, 0.0, 0.0),
            Err(FitError::InvalidProminence(_))
        ));
        assert!(matches!(
            detect_peaks_in(&axis, &vals, 1.5, 0.0),
            Err(FitError::InvalidProminence(_))
        ));
    }
}
