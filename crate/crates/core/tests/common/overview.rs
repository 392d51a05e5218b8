use recmc_core::logic::{Formula, LinTerm, Sort, Var};
use recmc_core::num::rat;
use recmc_core::program::{Mode, Procedure, ProcId, Program};

pub const M: ProcId = ProcId(0);
pub const T: ProcId = ProcId(1);
pub const D: ProcId = ProcId(2);

pub fn iv(n: &str) -> Var {
    Var::new(n, Sort::Int)
}

pub fn t(n: &str) -> LinTerm {
    LinTerm::var(&iv(n))
}

pub fn c(k: i64) -> LinTerm {
    LinTerm::int(k)
}

/// `M` runs `T` then decrements twice; `T` subtracts 2 and recurses while
/// positive, adding 1 on the way back.
pub fn overview() -> Program {
    let (l0, l1) = (iv("l0"), iv("l1"));
    let main = Procedure::new(
        "M",
        vec![iv("m0")],
        vec![iv("m")],
        vec![l0.clone(), l1.clone()],
        Formula::and([
            Formula::call(T, vec![iv("m0"), l0.clone()]),
            Formula::call(D, vec![l0.clone(), l1.clone()]),
            Formula::call(D, vec![l1.clone(), iv("m")]),
        ]),
    )
    .unwrap();
    let body_t = Formula::or([
        Formula::and([Formula::le(&t("t0"), &c(0)), Formula::eq(&t("t0"), &t("t"))]),
        Formula::and([
            Formula::lt(&c(0), &t("t0")),
            Formula::eq(&t("l0"), &(&t("t0") - &c(2))),
            Formula::call(T, vec![l0.clone(), l1.clone()]),
            Formula::eq(&t("t"), &(&t("l1") + &c(1))),
        ]),
    ]);
    let tp = Procedure::new("T", vec![iv("t0")], vec![iv("t")], vec![l0, l1], body_t).unwrap();
    let dp = Procedure::new("D", vec![iv("d0")], vec![iv("d")], vec![], Formula::eq(&t("d"), &(&t("d0") - &c(1)))).unwrap();
    Program::new(Mode::Int, vec![main, tp, dp], "M").unwrap()
}

/// m0 ≥ 2m + k
pub fn property(k: i64) -> Formula {
    Formula::le(&(&t("m").scale(&rat(2)) + &c(k)), &t("m0"))
}

