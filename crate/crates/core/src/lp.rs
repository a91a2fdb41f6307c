//! Export of the linearized second stage as an LP-format mixed-integer
//! program, for cross-checking with an external MILP solver.
//!
//! Variables: `x_a{a}` binaries, `s_i{i}_r{r}` and `s_i{i}_0` shares,
//! `w_i{i}_r{r}` linearized revenues, `p_r{r}` prices, plus `obj_const`
//! fixed to 1 to carry the objective constant. Indices are positions in the
//! instance. Numbers are written with 12 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::choice::{base_price, gamma};
use crate::model::{FareVector, Instance};
use crate::scalar::Scalar;

/// Rounds to 12 significant digits and prints the shortest decimal form.
fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Appends `coef var` with an explicit sign.
fn term(out: &mut String, coef: f64, var: &str) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {var}", num(-coef));
    } else {
        let _ = write!(out, " + {} {var}", num(coef));
    }
}

fn s_var(i: usize, r: usize) -> String {
    format!("s_i{i}_r{r}")
}

fn w_var(i: usize, r: usize) -> String {
    format!("w_i{i}_r{r}")
}

/// Number of rows the exported model has.
pub fn row_count<T: Scalar>(instance: &Instance<T>) -> usize {
    let idx = instance.index();
    let mut rows = instance.passenger_types().len() + instance.routes().len();
    for routes in &idx.type_routes {
        for &r in routes {
            rows += if idx.route_category[r].is_some() { 8 } else { 2 };
        }
    }
    rows
}

/// Renders the second-stage MILP for `fares` in LP file format.
pub fn milp_text<T: Scalar>(instance: &Instance<T>, fares: &FareVector<T>) -> String {
    let idx = instance.index();
    let w = instance.weights();
    let (mu_pax, mu_rev, mu_vmt) = (w.pax.as_f64(), w.rev.as_f64(), w.vmt.as_f64());
    let lam = fares.discount.as_f64();
    let sigma: Vec<f64> = (0..instance.routes().len())
        .map(|r| base_price(instance, r, fares).as_f64())
        .collect();

    let mut out = String::new();
    let _ = writeln!(out, "\\ second-stage discount activation model");
    let _ = writeln!(out, "\\ fares {}", serde_json::to_string(fares).expect("fares serialize"));
    out.push_str("Maximize\n obj:");

    let mut constant = 0.0;
    let mut price_coef = vec![0.0; instance.routes().len()];
    let mut obj_terms: Vec<(f64, String)> = Vec::new();
    for (i, ptype) in instance.passenger_types().iter().enumerate() {
        let n = ptype.count.as_f64();
        let alpha = ptype.alpha.as_f64();
        constant += n * mu_pax * (ptype.outside_utility.as_f64() + idx.type_utilities[i].iter().map(|u| u.as_f64()).sum::<f64>());
        for &r in &idx.type_routes[i] {
            price_coef[r] += n * mu_pax * alpha;
            if mu_rev != 0.0 {
                obj_terms.push((n * mu_rev, w_var(i, r)));
            }
        }
        let vmt = n * mu_vmt * ptype.drive_distance.as_f64();
        if vmt != 0.0 {
            obj_terms.push((-vmt, format!("s_i{i}_0")));
        }
    }
    for (r, &c) in price_coef.iter().enumerate() {
        if c != 0.0 {
            obj_terms.push((c, format!("p_r{r}")));
        }
    }
    obj_terms.push((constant, "obj_const".into()));
    for (k, (c, v)) in obj_terms.iter().enumerate() {
        if k > 0 && k % 6 == 0 {
            out.push_str("\n   ");
        }
        term(&mut out, *c, v);
    }
    out.push_str("\nSubject To\n");

    for (i, routes) in idx.type_routes.iter().enumerate() {
        let _ = write!(out, " sum_i{i}: s_i{i}_0");
        for &r in routes {
            let _ = write!(out, " + {}", s_var(i, r));
        }
        out.push_str(" = 1\n");
    }
    for (i, routes) in idx.type_routes.iter().enumerate() {
        let s0 = format!("s_i{i}_0");
        for &r in routes {
            let (s, wv) = (s_var(i, r), w_var(i, r));
            let g0 = gamma(instance, i, r, fares, false).as_f64();
            let sg = sigma[r];
            match idx.route_category[r] {
                None => {
                    let mut row = format!(" prop_i{i}_r{r}: {s0}");
                    term(&mut row, -g0, &s);
                    let _ = writeln!(out, "{row} = 0");
                    let mut row = format!(" wdef_i{i}_r{r}: {wv}");
                    term(&mut row, -sg, &s);
                    let _ = writeln!(out, "{row} = 0");
                }
                Some(a) => {
                    let x = format!("x_a{a}");
                    let gl = gamma(instance, i, r, fares, true).as_f64();
                    let ms = g0;
                    let mw = lam * sg;
                    let rows: [(&str, &str, f64, f64, &str, f64); 8] = [
                        ("sub0", s0.as_str(), g0, 0.0, "<=", 0.0),
                        ("slb0", s0.as_str(), g0, ms, ">=", 0.0),
                        ("sub1", s0.as_str(), gl, ms, "<=", ms),
                        ("slb1", s0.as_str(), gl, 0.0, ">=", 0.0),
                        ("wub0", wv.as_str(), sg, 0.0, "<=", 0.0),
                        ("wlb0", wv.as_str(), sg, mw, ">=", 0.0),
                        ("wub1", wv.as_str(), (1.0 - lam) * sg, mw, "<=", mw),
                        ("wlb1", wv.as_str(), (1.0 - lam) * sg, 0.0, ">=", 0.0),
                    ];
                    for (tag, lhs, coef, xcoef, sense, rhs) in rows {
                        let mut row = format!(" {tag}_i{i}_r{r}: {lhs}");
                        term(&mut row, -coef, &s);
                        term(&mut row, xcoef, &x);
                        let _ = writeln!(out, "{row} {sense} {}", num(rhs));
                    }
                }
            }
        }
    }
    for (r, &sg) in sigma.iter().enumerate() {
        match idx.route_category[r] {
            None => {
                let _ = writeln!(out, " price_r{r}: p_r{r} = {}", num(sg));
            }
            Some(a) => {
                let mut row = format!(" price_r{r}: p_r{r}");
                term(&mut row, lam * sg, &format!("x_a{a}"));
                let _ = writeln!(out, "{row} = {}", num(sg));
            }
        }
    }

    out.push_str("Bounds\n obj_const = 1\n");
    for (i, routes) in idx.type_routes.iter().enumerate() {
        for &r in routes {
            let _ = writeln!(out, " {} free", w_var(i, r));
        }
    }
    for r in 0..instance.routes().len() {
        let _ = writeln!(out, " p_r{r} free");
    }
    if instance.num_categories() > 0 {
        out.push_str("Binaries\n");
        for a in 0..instance.num_categories() {
            let _ = writeln!(out, " x_a{a}");
        }
    }
    out.push_str("End\n");
    out
}

/// Writes [`milp_text`] to `path`.
pub fn export_milp<T: Scalar>(instance: &Instance<T>, fares: &FareVector<T>, path: impl AsRef<Path>) -> io::Result<()> {
    fs::write(path, milp_text(instance, fares))
}
