use std::collections::BTreeMap;

use crate::ast::Model;
use crate::error::BindError;
use crate::value::{coerce_to_kind, Value};

/// Returns a copy of `model` with the given constants fixed. Already bound
/// constants may be overridden.
pub fn bind_constants(model: &Model, bindings: &BTreeMap<String, Value>) -> Result<Model, BindError> {
    let mut out = model.clone();
    for (name, value) in bindings {
        let decl = out
            .constants
            .iter_mut()
            .find(|c| &c.name == name)
            .ok_or_else(|| BindError::UnknownConstant(name.clone()))?;
        let v = coerce_to_kind(*value, decl.kind).ok_or_else(|| BindError::KindMismatch {
            name: name.clone(),
            expected: decl.kind,
            found: value.ty().to_string(),
        })?;
        decl.value = Some(v.to_expr());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    const SRC: &str = "dtmc const int decision_0_0; const int decision_0_1; const double p = 0.1;
        module M x:[0..3] init 0; [] x=0 -> (x'=decision_0_0); endmodule";

    #[test]
    fn empty_binding_is_identity() {
        let m = parse(SRC).unwrap();
        assert_eq!(bind_constants(&m, &BTreeMap::new()).unwrap(), m);
    }

    #[test]
    fn binding_removes_a_parameter() {
        let m = parse(SRC).unwrap();
        let b = BTreeMap::from([("decision_0_0".to_string(), Value::Int(3))]);
        let bound = bind_constants(&m, &b).unwrap();
        assert_eq!(bound.unbound_constants().count(), m.unbound_constants().count() - 1);
    }

    #[test]
    fn errors() {
        let m = parse(SRC).unwrap();
        let unknown = BTreeMap::from([("q".to_string(), Value::Int(1))]);
        assert_eq!(bind_constants(&m, &unknown), Err(BindError::UnknownConstant("q".into())));
        let wrong = BTreeMap::from([("decision_0_1".to_string(), Value::Double(0.5))]);
        assert!(matches!(bind_constants(&m, &wrong), Err(BindError::KindMismatch { .. })));
        let widened = BTreeMap::from([("p".to_string(), Value::Int(0))]);
        assert!(bind_constants(&m, &widened).is_ok());
    }
}
