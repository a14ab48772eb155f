use super::{BinOp, Expr, Var};

impl Expr {
    /// Symbolic partial derivative, constant-folded.
    pub fn differentiate(&self, var: Var) -> Expr {
        self.derive(var).fold()
    }

    fn derive(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(e) => Expr::neg(e.derive(var)),
            Expr::Binary(op, l, r) => {
                let (dl, dr) = (l.derive(var), r.derive(var));
                let (l, r) = ((**l).clone(), (**r).clone());
                match op {
                    BinOp::Add | BinOp::Sub => Expr::binary(*op, dl, dr),
                    BinOp::Mul => Expr::binary(
                        BinOp::Add,
                        Expr::binary(BinOp::Mul, dl, r),
                        Expr::binary(BinOp::Mul, l, dr),
                    ),
                    BinOp::Div => Expr::binary(
                        BinOp::Div,
                        Expr::binary(
                            BinOp::Sub,
                            Expr::binary(BinOp::Mul, dl, r.clone()),
                            Expr::binary(BinOp::Mul, l, dr),
                        ),
                        Expr::pow(r, 2.0),
                    ),
                }
            }
            Expr::Pow(b, n) => Expr::binary(
                BinOp::Mul,
                Expr::binary(BinOp::Mul, Expr::Const(*n), Expr::pow((**b).clone(), n - 1.0)),
                b.derive(var),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testgen::arb_expr;
    use super::super::{parse, Params};
    use super::*;
    use proptest::prelude::*;

    fn p() -> Params {
        [("a".to_string(), 2.0), ("c".to_string(), 1.25)].into_iter().collect()
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(parse("x*y").unwrap().differentiate(Var::X), Expr::y());
        assert_eq!(parse("c").unwrap().differentiate(Var::X), Expr::Const(0.0));
        let d = parse("x/(a+y)").unwrap().differentiate(Var::Y);
        for (x, y) in [(1.0, 1.0), (0.5, 3.0), (2.0, 0.0)] {
            let want = -x / (2.0 + y) / (2.0 + y);
            assert!((d.eval(x, y, &p()).unwrap() - want).abs() < 1e-15);
        }
    }

    fn fd(e: &Expr, var: Var, x: f64, y: f64) -> Option<f64> {
        // Richardson-extrapolated central differences
        let central = |h: f64| -> Option<f64> {
            let (xp, yp, xm, ym) = match var {
                Var::X => (x + h, y, x - h, y),
                Var::Y => (x, y + h, x, y - h),
            };
            Some((e.eval(xp, yp, &p()).ok()? - e.eval(xm, ym, &p()).ok()?) / (2.0 * h))
        };
        let h = 1e-3;
        Some((4.0 * central(h / 2.0)? - central(h)?) / 3.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn symbolic_matches_finite_difference(
            e in arb_expr(),
            x in -2.0f64..2.0,
            y in -2.0f64..2.0,
            wrt_x in any::<bool>(),
        ) {
            let var = if wrt_x { Var::X } else { Var::Y };
            let d = e.differentiate(var);
            // skip points close to a pole, where differences are meaningless
            let near_pole = [-1e-2, 1e-2].iter().any(|&s| {
                e.eval(x + s, y + s, &p()).map_or(true, |v| v.abs() > 1e6)
                    || e.eval(x + s, y - s, &p()).map_or(true, |v| v.abs() > 1e6)
            });
            if let (false, Ok(exact), Some(approx)) = (near_pole, d.eval(x, y, &p()), fd(&e, var, x, y)) {
                let scale = exact.abs().max(approx.abs()).max(1.0);
                prop_assume!(exact.abs() < 1e4);
                prop_assert!((exact - approx).abs() <= 1e-5 * scale, "{}: {} vs {}", e, exact, approx);
            }
        }
    }
}
