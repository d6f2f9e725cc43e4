//! Self-intersection detection on discretized cycles.

use super::DiscretizedCycle;
use crate::surface::{SurfaceModel, Vec3};

const TOL: f64 = 1e-9;

/// Closest distance between segments `[p0, p1]` and `[q0, q1]`.
pub(crate) fn segment_distance(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return r.norm();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// First pair of non-adjacent segments closer than `1e-9`, if any. Torus
/// segments are compared across lattice translates; sphere segments are
/// chords in the ambient space.
pub(crate) fn find_self_intersection(cycle: &DiscretizedCycle) -> Option<(usize, usize)> {
    let n = cycle.len();
    let torus = cycle.surface().model() == SurfaceModel::FlatTorus;
    let off = {
        let o = cycle.homology().offset();
        if torus { Vec3::new(o[0], o[1], 0.0) } else { Vec3::zeros() }
    };
    let e = cycle.embedded();
    let segs: Vec<(Vec3, Vec3)> = (0..n)
        .map(|j| {
            let b = if j + 1 == n { e[0] + off } else { e[j + 1] };
            (e[j], b)
        })
        .collect();
    let boxes: Vec<(Vec3, Vec3)> = segs.iter().map(|(a, b)| (a.inf(b), a.sup(b))).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let (pa, pb) = &segs[i];
            let (qa, qb) = &segs[j];
            if torus {
                let mid = (pa + pb - qa - qb) / 2.0;
                let (cx, cy) = (mid.x.round() as i64, mid.y.round() as i64);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        let shift = Vec3::new((cx + dx) as f64, (cy + dy) as f64, 0.0);
                        if j == i + 1 && shift == Vec3::zeros() {
                            continue;
                        }
                        if i == 0 && j == n - 1 && shift == -off {
                            continue;
                        }
                        if !boxes_close(&boxes[i], &(boxes[j].0 + shift, boxes[j].1 + shift)) {
                            continue;
                        }
                        if segment_distance(pa, pb, &(qa + shift), &(qb + shift)) < TOL {
                            return Some((i, j));
                        }
                    }
                }
            } else {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if !boxes_close(&boxes[i], &boxes[j]) {
                    continue;
                }
                if segment_distance(pa, pb, qa, qb) < TOL {
                    return Some((i, j));
                }
            }
        }
    }
    None
}

fn boxes_close(a: &(Vec3, Vec3), b: &(Vec3, Vec3)) -> bool {
    (0..3).all(|k| a.0[k] <= b.1[k] + TOL && b.0[k] <= a.1[k] + TOL)
}
