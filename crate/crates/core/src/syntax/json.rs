//! JSON form of programs: `{"v":1,"items":[...]}` where every AST node is an
//! object tagged by `"node"`.

use serde_json::{json, Map, Value};

use super::ParseError;
use crate::ast::{
    BaseType, BinOp, Definition, Expr, ExprKind, Item, Kind, OperatorDecl, Param, Program, Shape,
    Span, Type, UnaryOp,
};

pub const SCHEMA_VERSION: u64 = 1;

pub fn encode_json(p: &Program) -> String {
    serde_json::to_string(&program_to_value(p)).expect("AST values always serialize")
}

pub fn encode_json_pretty(p: &Program) -> String {
    serde_json::to_string_pretty(&program_to_value(p)).expect("AST values always serialize")
}

pub fn program_to_value(p: &Program) -> Value {
    json!({
        "v": SCHEMA_VERSION,
        "items": p.items().iter().map(item_to_value).collect::<Vec<_>>(),
    })
}

fn node(tag: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("node".into(), Value::String(tag.into()));
    m
}

fn params_to_value(params: &[Param]) -> Value {
    Value::Array(
        params
            .iter()
            .map(|p| json!({"name": p.name, "ty": type_to_value(&p.ty)}))
            .collect(),
    )
}

pub fn item_to_value(item: &Item) -> Value {
    match item {
        Item::Operator(o) => {
            let mut m = node("OperatorDecl");
            m.insert("name".into(), Value::String(o.name.clone()));
            m.insert("ty".into(), type_to_value(&o.ty));
            Value::Object(m)
        }
        Item::Definition(d) => {
            let mut m = node("Definition");
            m.insert("name".into(), Value::String(d.name.clone()));
            m.insert("params".into(), params_to_value(&d.params));
            m.insert("ret".into(), type_to_value(&d.ret));
            m.insert("body".into(), expr_to_value(&d.body));
            Value::Object(m)
        }
    }
}

pub fn type_to_value(t: &Type) -> Value {
    let m = match t {
        Type::Base(BaseType::Int(w)) => with(node("IntType"), [("width", json!(w))]),
        Type::Base(BaseType::UInt(w)) => with(node("UIntType"), [("width", json!(w))]),
        Type::Base(BaseType::Float(w)) => with(node("FloatType"), [("width", json!(w))]),
        Type::Base(BaseType::Bool) => node("BoolType"),
        Type::ShapeLit(s) => with(node("Shape"), [("dims", json!(s.dims()))]),
        Type::Tensor(b, s) => with(
            node("Tensor"),
            [("base", type_to_value(b)), ("shape", type_to_value(s))],
        ),
        Type::Arrow(dom, cod) => with(
            node("Arrow"),
            [
                ("domain", type_to_value(&Type::Product(dom.clone()))),
                ("codomain", type_to_value(cod)),
            ],
        ),
        Type::Var(v) => with(node("TypeVar"), [("name", json!(v))]),
        Type::Forall(v, k, body) => with(
            node("Forall"),
            [
                ("var", json!(v)),
                ("kind", json!(k.keyword())),
                ("body", type_to_value(body)),
            ],
        ),
        Type::Ref(inner) => with(node("RefType"), [("inner", type_to_value(inner))]),
        Type::Product(ts) => with(
            node("Product"),
            [("elements", Value::Array(ts.iter().map(type_to_value).collect()))],
        ),
    };
    Value::Object(m)
}

fn with<const N: usize>(mut m: Map<String, Value>, fields: [(&str, Value); N]) -> Map<String, Value> {
    for (k, v) in fields {
        m.insert(k.into(), v);
    }
    m
}

fn float_to_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("NaN")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn exprs(es: &[Expr]) -> Value {
    Value::Array(es.iter().map(expr_to_value).collect())
}

pub fn expr_to_value(e: &Expr) -> Value {
    stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || expr_to_value_inner(e))
}

fn expr_to_value_inner(e: &Expr) -> Value {
    let m = match &e.kind {
        ExprKind::Local(x) => with(node("LocalVar"), [("name", json!(x))]),
        ExprKind::Global(g) => with(node("GlobalVar"), [("name", json!(g))]),
        ExprKind::Int(v) => with(node("IntLit"), [("value", json!(v))]),
        ExprKind::Float(v) => with(node("FloatLit"), [("value", float_to_value(*v))]),
        ExprKind::Bool(b) => with(node("BoolLit"), [("value", json!(b))]),
        ExprKind::Call(f, args) => with(
            node("Call"),
            [("callee", expr_to_value(f)), ("args", exprs(args))],
        ),
        ExprKind::Let {
            binder,
            annotation,
            value,
            body,
        } => with(
            node("Let"),
            [
                ("binder", json!(binder)),
                (
                    "annotation",
                    annotation.as_ref().map_or(Value::Null, type_to_value),
                ),
                ("value", expr_to_value(value)),
                ("body", expr_to_value(body)),
            ],
        ),
        ExprKind::Cast(t, inner) => with(
            node("Cast"),
            [("target", type_to_value(t)), ("inner", expr_to_value(inner))],
        ),
        ExprKind::Binary(op, l, r) => with(
            node("BinOp"),
            [
                ("op", json!(op.symbol())),
                ("left", expr_to_value(l)),
                ("right", expr_to_value(r)),
            ],
        ),
        ExprKind::Unary(op, x) => with(
            node("UnaryOp"),
            [("op", json!(op.symbol())), ("operand", expr_to_value(x))],
        ),
        ExprKind::Tuple(es) => with(node("Tuple"), [("elements", exprs(es))]),
        ExprKind::Proj(t, i) => with(
            node("Projection"),
            [("tuple", expr_to_value(t)), ("index", json!(i))],
        ),
        ExprKind::TensorLit(es) => with(node("TensorLit"), [("elements", exprs(es))]),
        ExprKind::If(c, t, f) => with(
            node("If"),
            [
                ("cond", expr_to_value(c)),
                ("then", expr_to_value(t)),
                ("else", expr_to_value(f)),
            ],
        ),
        ExprKind::Zero(t) => with(node("Zero"), [("ty", type_to_value(t))]),
        ExprKind::Grad(f) => with(node("Grad"), [("fn", expr_to_value(f))]),
        ExprKind::RefNew(x) => with(node("RefNew"), [("init", expr_to_value(x))]),
        ExprKind::RefRead(r) => with(node("RefRead"), [("ref", expr_to_value(r))]),
        ExprKind::RefWrite(r, v) => with(
            node("RefWrite"),
            [("ref", expr_to_value(r)), ("value", expr_to_value(v))],
        ),
        ExprKind::Function { params, ret, body } => with(
            node("Function"),
            [
                ("params", params_to_value(params)),
                ("ret", type_to_value(ret)),
                ("body", expr_to_value(body)),
            ],
        ),
    };
    Value::Object(m)
}

// ----- decoding -----

fn schema(msg: impl Into<String>) -> ParseError {
    ParseError::new(msg, Span::new(1, 1, 0, 0))
}

pub fn decode_json(text: &str) -> Result<Program, ParseError> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        let line = e.line().max(1);
        let column = e.column().max(1);
        let offset = line_col_offset(text, line, column);
        ParseError::new(
            format!("malformed JSON: {e}"),
            Span::new(line as u32, column as u32, offset, offset),
        )
    })?;
    let obj = root
        .as_object()
        .ok_or_else(|| schema("top level must be an object"))?;
    match obj.get("v").and_then(Value::as_u64) {
        Some(SCHEMA_VERSION) => {}
        Some(other) => return Err(schema(format!("unsupported schema version {other}"))),
        None => return Err(schema("missing schema version field \"v\"")),
    }
    let items = obj
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("missing array field \"items\""))?;
    let mut program = Program::default();
    for (i, item) in items.iter().enumerate() {
        let item = value_to_item(item).map_err(|e| schema(format!("items[{i}]: {}", e.message)))?;
        program
            .push(item)
            .map_err(|name| schema(format!("duplicate global name `@{name}`")))?;
    }
    Ok(program)
}

fn line_col_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column - 1).min(text.len())
}

struct Obj<'a> {
    tag: &'a str,
    map: &'a Map<String, Value>,
}

impl<'a> Obj<'a> {
    fn of(v: &'a Value) -> Result<Obj<'a>, ParseError> {
        let map = v
            .as_object()
            .ok_or_else(|| schema(format!("expected a node object, found {v}")))?;
        let tag = map
            .get("node")
            .and_then(Value::as_str)
            .ok_or_else(|| schema("node object without a \"node\" tag"))?;
        Ok(Obj { tag, map })
    }

    fn field(&self, name: &str) -> Result<&'a Value, ParseError> {
        self.map
            .get(name)
            .ok_or_else(|| schema(format!("{} node missing field \"{name}\"", self.tag)))
    }

    fn str(&self, name: &str) -> Result<&'a str, ParseError> {
        self.field(name)?
            .as_str()
            .ok_or_else(|| schema(format!("{}.{name} must be a string", self.tag)))
    }

    fn u64(&self, name: &str) -> Result<u64, ParseError> {
        self.field(name)?
            .as_u64()
            .ok_or_else(|| schema(format!("{}.{name} must be a natural number", self.tag)))
    }

    fn array(&self, name: &str) -> Result<&'a Vec<Value>, ParseError> {
        self.field(name)?
            .as_array()
            .ok_or_else(|| schema(format!("{}.{name} must be an array", self.tag)))
    }

    fn ty(&self, name: &str) -> Result<Type, ParseError> {
        value_to_type(self.field(name)?)
    }

    fn expr(&self, name: &str) -> Result<Box<Expr>, ParseError> {
        value_to_expr(self.field(name)?).map(Box::new)
    }

    fn exprs(&self, name: &str) -> Result<Vec<Expr>, ParseError> {
        self.array(name)?.iter().map(value_to_expr).collect()
    }

    fn width(&self) -> Result<u32, ParseError> {
        u32::try_from(self.u64("width")?).map_err(|_| schema("width out of range"))
    }

    fn params(&self, name: &str) -> Result<Vec<Param>, ParseError> {
        self.array(name)?
            .iter()
            .map(|p| {
                let m = p
                    .as_object()
                    .ok_or_else(|| schema("parameter must be an object"))?;
                let pname = m
                    .get("name")
                    .and_then(Value::as_str)
                    .ok_or_else(|| schema("parameter missing \"name\""))?;
                let ty = m
                    .get("ty")
                    .ok_or_else(|| schema("parameter missing \"ty\""))
                    .and_then(value_to_type)?;
                Ok(Param::new(pname, ty))
            })
            .collect()
    }
}

fn value_to_item(v: &Value) -> Result<Item, ParseError> {
    let o = Obj::of(v)?;
    match o.tag {
        "OperatorDecl" => Ok(Item::Operator(OperatorDecl {
            name: o.str("name")?.to_string(),
            ty: o.ty("ty")?,
            span: Span::default(),
        })),
        "Definition" => Ok(Item::Definition(Definition {
            name: o.str("name")?.to_string(),
            params: o.params("params")?,
            ret: o.ty("ret")?,
            body: *o.expr("body")?,
            span: Span::default(),
        })),
        other => Err(schema(format!("unknown item node \"{other}\""))),
    }
}

pub fn value_to_type(v: &Value) -> Result<Type, ParseError> {
    let o = Obj::of(v)?;
    Ok(match o.tag {
        "IntType" => Type::Base(BaseType::Int(o.width()?)),
        "UIntType" => Type::Base(BaseType::UInt(o.width()?)),
        "FloatType" => Type::Base(BaseType::Float(o.width()?)),
        "BoolType" => Type::Base(BaseType::Bool),
        "Shape" => {
            let dims = o
                .array("dims")?
                .iter()
                .map(|d| {
                    d.as_u64()
                        .ok_or_else(|| schema("Shape.dims must hold natural numbers"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if dims.contains(&0) {
                return Err(schema("Shape.dims: dimensions must be at least 1"));
            }
            Type::ShapeLit(Shape(dims))
        }
        "Tensor" => Type::Tensor(Box::new(o.ty("base")?), Box::new(o.ty("shape")?)),
        "Arrow" => match o.ty("domain")? {
            Type::Product(dom) => Type::Arrow(dom, Box::new(o.ty("codomain")?)),
            _ => return Err(schema("Arrow.domain must be a Product node")),
        },
        "TypeVar" => Type::Var(o.str("name")?.to_string()),
        "Forall" => {
            let kind = match o.str("kind")? {
                "BaseType" => Kind::BaseType,
                "Shape" => Kind::Shape,
                "Type" => Kind::Type,
                other => return Err(schema(format!("unknown kind \"{other}\""))),
            };
            Type::Forall(o.str("var")?.to_string(), kind, Box::new(o.ty("body")?))
        }
        "RefType" => Type::Ref(Box::new(o.ty("inner")?)),
        "Product" => Type::Product(
            o.array("elements")?
                .iter()
                .map(value_to_type)
                .collect::<Result<_, _>>()?,
        ),
        other => return Err(schema(format!("unknown type node \"{other}\""))),
    })
}

fn float_from_value(v: &Value) -> Result<f64, ParseError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| schema("FloatLit.value is not representable")),
        Value::String(s) if s == "NaN" => Ok(f64::NAN),
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        Value::String(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        _ => Err(schema("FloatLit.value must be a number")),
    }
}

pub fn value_to_expr(v: &Value) -> Result<Expr, ParseError> {
    stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || value_to_expr_inner(v))
}

fn value_to_expr_inner(v: &Value) -> Result<Expr, ParseError> {
    let o = Obj::of(v)?;
    let kind = match o.tag {
        "LocalVar" => ExprKind::Local(o.str("name")?.to_string()),
        "GlobalVar" => ExprKind::Global(o.str("name")?.to_string()),
        "IntLit" => ExprKind::Int(
            o.field("value")?
                .as_i64()
                .ok_or_else(|| schema("IntLit.value must be an integer"))?,
        ),
        "FloatLit" => ExprKind::Float(float_from_value(o.field("value")?)?),
        "BoolLit" => ExprKind::Bool(
            o.field("value")?
                .as_bool()
                .ok_or_else(|| schema("BoolLit.value must be a boolean"))?,
        ),
        "Call" => ExprKind::Call(o.expr("callee")?, o.exprs("args")?),
        "Let" => ExprKind::Let {
            binder: o.str("binder")?.to_string(),
            annotation: match o.map.get("annotation") {
                None | Some(Value::Null) => None,
                Some(t) => Some(value_to_type(t)?),
            },
            value: o.expr("value")?,
            body: o.expr("body")?,
        },
        "Cast" => ExprKind::Cast(o.ty("target")?, o.expr("inner")?),
        "BinOp" => {
            let sym = o.str("op")?;
            let op = BinOp::from_symbol(sym)
                .ok_or_else(|| schema(format!("unknown binary operator \"{sym}\"")))?;
            ExprKind::Binary(op, o.expr("left")?, o.expr("right")?)
        }
        "UnaryOp" => {
            let sym = o.str("op")?;
            let op = UnaryOp::from_symbol(sym)
                .ok_or_else(|| schema(format!("unknown unary operator \"{sym}\"")))?;
            ExprKind::Unary(op, o.expr("operand")?)
        }
        "Tuple" => ExprKind::Tuple(o.exprs("elements")?),
        "Projection" => ExprKind::Proj(o.expr("tuple")?, o.u64("index")? as usize),
        "TensorLit" => {
            let es = o.exprs("elements")?;
            if es.is_empty() {
                return Err(schema("TensorLit.elements must be nonempty"));
            }
            ExprKind::TensorLit(es)
        }
        "If" => ExprKind::If(o.expr("cond")?, o.expr("then")?, o.expr("else")?),
        "Zero" => ExprKind::Zero(o.ty("ty")?),
        "Grad" => ExprKind::Grad(o.expr("fn")?),
        "RefNew" => ExprKind::RefNew(o.expr("init")?),
        "RefRead" => ExprKind::RefRead(o.expr("ref")?),
        "RefWrite" => ExprKind::RefWrite(o.expr("ref")?, o.expr("value")?),
        "Function" => ExprKind::Function {
            params: o.params("params")?,
            ret: o.ty("ret")?,
            body: o.expr("body")?,
        },
        other => return Err(schema(format!("unknown expression node \"{other}\""))),
    };
    Ok(Expr::from(kind))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_literal_schema() {
        assert_eq!(
            expr_to_value(&Expr::int(3)).to_string(),
            r#"{"node":"IntLit","value":3}"#
        );
    }

    #[test]
    fn shape_schema() {
        assert_eq!(
            type_to_value(&Type::ShapeLit(Shape(vec![2, 3]))).to_string(),
            r#"{"node":"Shape","dims":[2,3]}"#
        );
    }

    #[test]
    fn unknown_tag_rejected() {
        assert!(value_to_expr(&json!({"node": "Bogus"})).is_err());
        let doc = r#"{"v":1,"items":[{"node":"Bogus"}]}"#;
        assert!(decode_json(doc).unwrap_err().message.contains("Bogus"));
    }

    #[test]
    fn zero_extent_rejected() {
        let err = value_to_type(&json!({"node": "Shape", "dims": [0]})).unwrap_err();
        assert!(err.message.contains("at least 1"));
    }

    #[test]
    fn malformed_json_has_position() {
        let err = decode_json("{\"v\":1,\n \"items\": [}").unwrap_err();
        assert_eq!(err.span.line, 2);
        assert!(err.span.start <= 22);
    }

    #[test]
    fn missing_field_reported() {
        let err = value_to_expr(&json!({"node": "Call", "callee": {"node":"GlobalVar","name":"f"}}))
            .unwrap_err();
        assert!(err.message.contains("args"));
    }

    #[test]
    fn arrow_domain_must_be_product() {
        let bad = json!({"node":"Arrow","domain":{"node":"BoolType"},"codomain":{"node":"BoolType"}});
        assert!(value_to_type(&bad).is_err());
    }
}
