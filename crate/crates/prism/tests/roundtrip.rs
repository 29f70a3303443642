use std::fs;
use std::path::PathBuf;

use parley_prism::{parse, parse_expr, print, typecheck, BinOp, Expr, Func, UnaryOp};
use proptest::prelude::*;

fn corpus() -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "prism"))
        .collect();
    files.sort();
    files.into_iter().map(|p| {
        let text = fs::read_to_string(&p).unwrap();
        (p, text)
    }).collect()
}

#[test]
fn corpus_round_trips() {
    let files = corpus();
    assert!(!files.is_empty());
    for (path, text) in files {
        let m = parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let printed = print(&m);
        assert_eq!(parse(&printed).unwrap(), m, "{}", path.display());
        assert_eq!(print(&parse(&printed).unwrap()), printed);
    }
}

#[test]
fn corpus_typechecks_cleanly() {
    for (path, text) in corpus() {
        let diags = typecheck(&parse(&text).unwrap());
        assert!(diags.is_empty(), "{}: {diags:?}", path.display());
    }
}

#[test]
fn robot_listing_structure() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let m = parse(&fs::read_to_string(dir.join("listing1.prism")).unwrap()).unwrap();
    let names: Vec<_> = m.modules.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(names, ["Robot", "Adaptation_MAPE_Controller", "Knowledge"]);
    assert_eq!(m.rewards.len(), 1);
    assert_eq!(m.rewards[0].name, "cost");
    assert!(print(&m).lines().any(|l| l == "rewards \"cost\""));
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,6}".prop_filter("reserved", |s| {
        !matches!(s.as_str(), "int" | "double" | "bool" | "init" | "label" | "const" | "module" | "true" | "false" | "min" | "max" | "dtmc" | "rewards" | "formula")
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-1_000_000i64..1_000_000).prop_map(Expr::Int),
        (-1e6f64..1e6).prop_map(Expr::Double),
        any::<bool>().prop_map(Expr::Bool),
        ident().prop_map(Expr::Ident),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        let op = prop_oneof![
            Just(BinOp::Or),
            Just(BinOp::And),
            Just(BinOp::Eq),
            Just(BinOp::Ne),
            Just(BinOp::Lt),
            Just(BinOp::Le),
            Just(BinOp::Gt),
            Just(BinOp::Ge),
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
        ];
        prop_oneof![
            (op, inner.clone(), inner.clone())
                // Division by a literal zero is rejected by the parser.
                .prop_filter("literal zero divisor", |(op, _, r)| {
                    !(*op == BinOp::Div && matches!(r, Expr::Int(0)) || *op == BinOp::Div && matches!(r, Expr::Double(d) if *d == 0.0))
                })
                .prop_map(|(op, l, r)| Expr::Binary(op, Box::new(l), Box::new(r))),
            inner.clone().prop_map(|e| Expr::Unary(UnaryOp::Not, Box::new(e))),
            inner.clone().prop_map(|e| Expr::Unary(UnaryOp::Neg, Box::new(e))),
            (prop_oneof![Just(Func::Min), Just(Func::Max)], prop::collection::vec(inner, 2..4))
                .prop_map(|(f, args)| Expr::Call(f, args)),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expressions_reparse(e in expr()) {
        let printed = e.to_string();
        let back = parse_expr(&printed);
        prop_assert!(back.is_ok(), "{printed}: {:?}", back);
        prop_assert_eq!(back.unwrap(), e);
    }
}
