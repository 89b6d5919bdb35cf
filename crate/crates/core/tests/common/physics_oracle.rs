//! Equations-only restatement of the five control tasks, one transition at
//! a time. State layouts match the crate's `vars`.

use std::f64::consts::PI;

pub struct Step {
    pub vars: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
}

pub fn cartpole(s: &[f64], action: usize) -> Step {
    let (g, mc, mp, l, tau) = (9.8, 1.0, 0.1, 0.5, 0.02);
    let f = if action == 1 { 10.0 } else { -10.0 };
    let (x, xd, th, thd) = (s[0], s[1], s[2], s[3]);
    let m = mc + mp;
    let thdd = (g * th.sin() + th.cos() * ((-f - mp * l * thd * thd * th.sin()) / m))
        / (l * (4.0 / 3.0 - mp * th.cos().powi(2) / m));
    let xdd = (f + mp * l * (thd * thd * th.sin() - thdd * th.cos())) / m;
    let v = vec![x + tau * xd, xd + tau * xdd, th + tau * thd, thd + tau * thdd];
    let limit = 12.0 * PI / 180.0;
    let terminated = v[0].abs() > 2.4 || v[2].abs() > limit;
    Step {
        vars: v,
        reward: 1.0,
        terminated,
    }
}

fn car(s: &[f64], accel: f64, goal: f64) -> (Vec<f64>, bool) {
    let mut v = s[1] + accel - 0.0025 * (3.0 * s[0]).cos();
    v = v.clamp(-0.07, 0.07);
    let mut p = s[0] + v;
    if p <= -1.2 {
        p = -1.2;
        if v < 0.0 {
            v = 0.0;
        }
    }
    if p > 0.6 {
        p = 0.6;
    }
    let done = p >= goal && v >= 0.0;
    (vec![p, v], done)
}

pub fn mountain_car(s: &[f64], action: usize) -> Step {
    let (vars, terminated) = car(s, 0.001 * (action as f64 - 1.0), 0.5);
    Step {
        vars,
        reward: -1.0,
        terminated,
    }
}

pub fn mountain_car_continuous(s: &[f64], a: f64) -> Step {
    let (vars, terminated) = car(s, 0.0015 * a.clamp(-1.0, 1.0), 0.45);
    let bonus = if terminated { 100.0 } else { 0.0 };
    Step {
        vars,
        reward: bonus - 0.1 * a * a,
        terminated,
    }
}

pub fn pendulum(s: &[f64], u: f64) -> Step {
    let u = u.clamp(-2.0, 2.0);
    let (th, thd) = (s[0], s[1]);
    let wrapped = th.sin().atan2(th.cos());
    let cost = wrapped * wrapped + 0.1 * thd * thd + 0.001 * u * u;
    let thd_next = (thd + 0.05 * (15.0 * th.sin() + 3.0 * u)).clamp(-8.0, 8.0);
    Step {
        vars: vec![th + 0.05 * thd_next, thd_next],
        reward: -cost,
        terminated: false,
    }
}

/// Acrobot accelerations from the manipulator equation
/// `M(q) q̈ + c(q, q̇) + g(q) = (0, τ)`, solved by Cramer's rule.
fn acrobot_accel(q: [f64; 4], tau: f64) -> [f64; 4] {
    let (m1, m2, l1, lc1, lc2, i1, i2, g) = (1.0, 1.0, 1.0, 0.5, 0.5, 1.0, 1.0, 9.8);
    let [a, b, ad, bd] = q;
    let m11 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * b.cos()) + i1 + i2;
    let m12 = m2 * (lc2 * lc2 + l1 * lc2 * b.cos()) + i2;
    let m22 = m2 * lc2 * lc2 + i2;
    let h = m2 * l1 * lc2 * b.sin();
    let g2 = m2 * lc2 * g * (a + b - PI / 2.0).cos();
    let g1 = (m1 * lc1 + m2 * l1) * g * (a - PI / 2.0).cos() + g2;
    let r1 = -(-h * bd * bd - 2.0 * h * ad * bd + g1);
    let r2 = tau - (h * ad * ad + g2);
    let det = m11 * m22 - m12 * m12;
    [ad, bd, (m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det]
}

pub fn acrobot(s: &[f64], action: usize) -> Step {
    let tau = action as f64 - 1.0;
    let dt = 0.2;
    let y = [s[0], s[1], s[2], s[3]];
    let shift = |k: &[f64; 4], h: f64| std::array::from_fn::<f64, 4, _>(|i| y[i] + h * k[i]);
    let k1 = acrobot_accel(y, tau);
    let k2 = acrobot_accel(shift(&k1, dt / 2.0), tau);
    let k3 = acrobot_accel(shift(&k2, dt / 2.0), tau);
    let k4 = acrobot_accel(shift(&k3, dt), tau);
    let n: [f64; 4] = std::array::from_fn(|i| y[i] + dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0);
    let wrap = |x: f64| (x + PI).rem_euclid(2.0 * PI) - PI;
    let v = vec![
        wrap(n[0]),
        wrap(n[1]),
        n[2].clamp(-4.0 * PI, 4.0 * PI),
        n[3].clamp(-9.0 * PI, 9.0 * PI),
    ];
    let terminated = -v[0].cos() - (v[0] + v[1]).cos() > 1.0;
    Step {
        vars: v,
        reward: if terminated { 0.0 } else { -1.0 },
        terminated,
    }
}

/// Distance between two angles on the circle.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
