use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use super::kinds::{instantiate, kind_in};
use super::{Rule, TypeEnv, TypeError};
use crate::ast::{
    alpha_equal, all_local_names, pretty_type, BaseType, Definition, Expr, ExprKind, Item, Kind,
    OperatorDecl, Param, Program, Shape, Span, Type,
};
use crate::autodiff::{self, FreshNames};
use crate::eval::Registry;

/// A checked program: Grad nodes are elaborated away, and every definition
/// carries the types of its body's subexpressions in pre-order.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    program: Program,
    globals: HashMap<String, Type>,
    expr_types: HashMap<String, Vec<Type>>,
    registry: Arc<Registry>,
}

impl TypedProgram {
    /// The elaborated program (Grad-free; may contain generated definitions).
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn global_type(&self, name: &str) -> Option<&Type> {
        self.globals.get(name)
    }

    /// Types of `definition(name).body.preorder()`, index for index.
    pub fn expr_types(&self, name: &str) -> Option<&[Type]> {
        self.expr_types.get(name).map(Vec::as_slice)
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }
}

/// Checks a program against the builtin operator registry.
pub fn check_program(p: &Program) -> Result<TypedProgram, Vec<TypeError>> {
    check_program_with(p, Arc::new(Registry::builtin()))
}

pub fn check_program_with(
    p: &Program,
    registry: Arc<Registry>,
) -> Result<TypedProgram, Vec<TypeError>> {
    let mut checker = Checker::new(p, registry);
    checker.check_all()
}

/// Types an expression with no surrounding program. Grad is accepted over
/// closed function literals.
pub fn type_of(env: &TypeEnv, e: &Expr) -> Result<Type, TypeError> {
    let mut checker = Checker::new(&Program::default(), Arc::new(Registry::builtin()));
    checker.globals.extend(env.globals.clone());
    checker.names.reserve_expr(e);
    checker.delta = env.delta.clone();
    let mut scope = env.gamma.clone();
    checker.check(&mut scope, e).map(|(_, t)| t)
}

/// Elaborating checker. Holds the state that gradient elaboration needs:
/// elaborated bodies, lifted copies of definitions and a fresh-name supply.
pub struct Checker {
    registry: Arc<Registry>,
    source: Program,
    pub(crate) globals: HashMap<String, Type>,
    delta: Vec<(String, Kind)>,
    elaborated: HashMap<String, Definition>,
    in_progress: HashSet<String>,
    failed: HashMap<String, TypeError>,
    lifted: HashMap<String, String>,
    generated: Vec<Definition>,
    added_decls: Vec<OperatorDecl>,
    pub(crate) names: FreshNames,
    trace: Option<Vec<Type>>,
}

type Scope = Vec<(String, Type)>;

impl Checker {
    pub fn new(p: &Program, registry: Arc<Registry>) -> Checker {
        let mut names = FreshNames::default();
        for item in p.items() {
            names.reserve_global(item.name());
            if let Item::Definition(d) = item {
                for param in &d.params {
                    names.reserve(&param.name);
                }
                names.reserve_expr(&d.body);
            }
        }
        Checker {
            registry,
            source: p.clone(),
            globals: HashMap::new(),
            delta: Vec::new(),
            elaborated: HashMap::new(),
            in_progress: HashSet::new(),
            failed: HashMap::new(),
            lifted: HashMap::new(),
            generated: Vec::new(),
            added_decls: Vec::new(),
            names,
            trace: None,
        }
    }

    pub(crate) fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    fn check_all(&mut self) -> Result<TypedProgram, Vec<TypeError>> {
        let mut errors = Vec::new();

        for item in self.source.items() {
            match self.check_signature(item) {
                Ok(ty) => {
                    self.globals.insert(item.name().to_string(), ty);
                }
                Err(e) => errors.push(e.at(item.span())),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        let names: Vec<String> = self.source.definitions().map(|d| d.name.clone()).collect();
        for name in &names {
            if let Err(e) = self.elaborated_definition(name) {
                if !errors.contains(&e) {
                    errors.push(e);
                }
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        let program = self.assemble();
        verify(program, self.registry.clone())
    }

    fn check_signature(&self, item: &Item) -> Result<Type, TypeError> {
        match item {
            Item::Operator(op) => {
                self.expect_value_type(&op.ty, Rule::OperatorDeclaration, "operator type")?;
                if let Some(registered) = self.registry.get(&op.name) {
                    if !alpha_equal(&registered.ty, &op.ty) {
                        return Err(TypeError::new(
                            Rule::OperatorDeclaration,
                            format!(
                                "`@{}` is declared as `{}` but registered as `{}`",
                                op.name,
                                pretty_type(&op.ty),
                                pretty_type(&registered.ty)
                            ),
                        ));
                    }
                }
                Ok(op.ty.clone())
            }
            Item::Definition(d) => {
                distinct_params(&d.params)?;
                for p in &d.params {
                    self.expect_value_type(&p.ty, Rule::FunctionDefinition, "parameter type")?;
                }
                self.expect_value_type(&d.ret, Rule::FunctionDefinition, "return type")?;
                Ok(d.ty())
            }
        }
    }

    fn expect_value_type(&self, t: &Type, rule: Rule, what: &str) -> Result<(), TypeError> {
        let mut delta = self.delta.clone();
        let k = kind_in(&mut delta, t)?;
        if k == Kind::Type {
            Ok(())
        } else {
            Err(TypeError::new(
                rule,
                format!("{what} `{}` has kind {k}, expected Type", pretty_type(t)),
            ))
        }
    }

    /// Source items with elaborated bodies, then any builtin declarations and
    /// lifted definitions introduced by elaboration.
    fn assemble(&self) -> Program {
        let mut items: Vec<Item> = Vec::new();
        for item in self.source.items() {
            match item {
                Item::Operator(_) => items.push(item.clone()),
                Item::Definition(d) => {
                    items.push(Item::Definition(self.elaborated[&d.name].clone()))
                }
            }
        }
        items.extend(self.added_decls.iter().cloned().map(Item::Operator));
        items.extend(self.generated.iter().cloned().map(Item::Definition));
        Program::new(items).expect("generated names are fresh")
    }

    /// Elaborated copy of a source definition, checking it on first request.
    pub(crate) fn elaborated_definition(&mut self, name: &str) -> Result<Definition, TypeError> {
        if let Some(d) = self.elaborated.get(name) {
            return Ok(d.clone());
        }
        if let Some(d) = self.generated.iter().find(|d| d.name == name) {
            return Ok(d.clone());
        }
        if let Some(e) = self.failed.get(name) {
            return Err(e.clone());
        }
        let Some(def) = self.source.definition(name).cloned() else {
            return Err(TypeError::new(
                Rule::Scope,
                format!("`@{name}` is not a definition"),
            ));
        };
        if !self.in_progress.insert(name.to_string()) {
            return Err(TypeError::new(
                Rule::Gradient,
                format!("`@{name}` is differentiated while its own body is being elaborated"),
            )
            .at(def.span));
        }
        let mut scope: Scope = def
            .params
            .iter()
            .map(|p| (p.name.clone(), p.ty.clone()))
            .collect();
        let result = self.check(&mut scope, &def.body);
        self.in_progress.remove(name);
        let result = result.map_err(|e| e.at(def.span)).and_then(|(body, ty)| {
            if alpha_equal(&ty, &def.ret) {
                Ok(body)
            } else {
                Err(TypeError::new(
                Rule::FunctionDefinition,
                format!(
                    "body of `@{name}` has type `{}`, but the declared return type is `{}`",
                        pretty_type(&ty),
                        pretty_type(&def.ret)
                    ),
                )
                .at(def.body.span)
                .at(def.span))
            }
        });
        let body = match result {
            Ok(body) => body,
            Err(e) => {
                self.failed.insert(name.to_string(), e.clone());
                return Err(e);
            }
        };
        let out = Definition { body, ..def };
        self.elaborated.insert(name.to_string(), out.clone());
        Ok(out)
    }

    pub(crate) fn is_definition(&self, name: &str) -> bool {
        self.source.definition(name).is_some() || self.generated.iter().any(|d| d.name == name)
    }

    pub(crate) fn lifted_name(&self, name: &str) -> Option<&String> {
        self.lifted.get(name)
    }

    /// Reserves the lifted name for `name` and records its type before the
    /// body exists, so recursive definitions can refer to themselves.
    pub(crate) fn begin_lift(&mut self, name: &str, lifted_ty: Type) -> String {
        let new = self.names.fresh_global(&format!("{name}_ad"));
        self.lifted.insert(name.to_string(), new.clone());
        self.globals.insert(new.clone(), lifted_ty);
        new
    }

    pub(crate) fn generated_definitions(&self) -> Vec<Definition> {
        self.generated.clone()
    }

    pub(crate) fn finish_lift(&mut self, def: Definition) {
        self.generated.push(def);
    }

    /// Declares a registry operator in the output program if elaboration
    /// uses it and the source did not declare it.
    pub(crate) fn ensure_operator(&mut self, name: &str) -> Result<(), TypeError> {
        if self.globals.contains_key(name) {
            return Ok(());
        }
        let Some(op) = self.registry.get(name) else {
            return Err(TypeError::new(
                Rule::Gradient,
                format!("operator `@{name}` is not registered"),
            ));
        };
        self.globals.insert(name.to_string(), op.ty.clone());
        self.names.reserve_global(name);
        self.added_decls.push(OperatorDecl {
            name: name.to_string(),
            ty: op.ty.clone(),
            span: Span::default(),
        });
        Ok(())
    }

    fn lookup<'s>(scope: &'s Scope, name: &str) -> Option<&'s Type> {
        scope.iter().rev().find(|(v, _)| v == name).map(|(_, t)| t)
    }

    /// Checks `e` and returns it with Grad nodes elaborated, plus its type.
    pub(crate) fn check(&mut self, scope: &mut Scope, e: &Expr) -> Result<(Expr, Type), TypeError> {
        let slot = self.trace.as_mut().map(|t| {
            t.push(Type::unit());
            t.len() - 1
        });
        let (out, ty) = self.check_kind(scope, e).map_err(|err| err.at(e.span))?;
        if let (Some(slot), Some(trace)) = (slot, self.trace.as_mut()) {
            trace[slot] = ty.clone();
        }
        Ok((Expr::new(out, e.span), ty))
    }

    fn check_kind(&mut self, scope: &mut Scope, e: &Expr) -> Result<(ExprKind, Type), TypeError> {
        use ExprKind as K;
        Ok(match &e.kind {
            K::Local(x) => match Self::lookup(scope, x) {
                Some(t) => (e.kind.clone(), t.clone()),
                None => {
                    return Err(TypeError::new(Rule::Scope, format!("unbound variable `{x}`")))
                }
            },
            K::Global(g) => match self.globals.get(g) {
                Some(Type::Forall(..)) => {
                    return Err(TypeError::new(
                        Rule::Instantiate,
                        format!("polymorphic operator `@{g}` must be called directly"),
                    ))
                }
                Some(t) => (e.kind.clone(), t.clone()),
                None => return Err(TypeError::new(Rule::Scope, format!("unknown global `@{g}`"))),
            },
            K::Int(v) => {
                if i32::try_from(*v).is_err() {
                    return Err(TypeError::new(
                        Rule::IntLiteral,
                        format!("integer literal {v} does not fit in 32 bits"),
                    ));
                }
                (e.kind.clone(), Type::scalar(BaseType::I32))
            }
            K::Float(v) => {
                if !v.is_finite() || v.abs() > f32::MAX as f64 {
                    return Err(TypeError::new(
                        Rule::FloatLiteral,
                        format!("float literal {v} is not representable in 32 bits"),
                    ));
                }
                (e.kind.clone(), Type::scalar(BaseType::F32))
            }
            K::Bool(_) => (e.kind.clone(), Type::scalar(BaseType::Bool)),
            K::Call(callee, args) => self.check_call(scope, callee, args)?,
            K::Let {
                binder,
                annotation,
                value,
                body,
            } => {
                let (value, vt) = self.check(scope, value)?;
                if let Some(ann) = annotation {
                    self.expect_value_type(ann, Rule::Let, "annotation")?;
                    if !alpha_equal(ann, &vt) {
                        return Err(TypeError::new(
                            Rule::Let,
                            format!(
                                "`{binder}` is annotated `{}` but bound to a value of type `{}`",
                                pretty_type(ann),
                                pretty_type(&vt)
                            ),
                        )
                        .at(value.span));
                    }
                }
                scope.push((binder.clone(), vt));
                let r = self.check(scope, body);
                scope.pop();
                let (body, bt) = r?;
                (
                    K::Let {
                        binder: binder.clone(),
                        annotation: annotation.clone(),
                        value: Box::new(value),
                        body: Box::new(body),
                    },
                    bt,
                )
            }
            K::Cast(t, inner) => {
                self.expect_value_type(t, Rule::CastAscription, "ascribed type")?;
                let (inner, it) = self.check(scope, inner)?;
                if !alpha_equal(t, &it) {
                    return Err(TypeError::new(
                        Rule::CastAscription,
                        format!(
                            "expression of type `{}` cannot be ascribed `{}` (casts do not convert)",
                            pretty_type(&it),
                            pretty_type(t)
                        ),
                    ));
                }
                (K::Cast(t.clone(), Box::new(inner)), it)
            }
            K::Binary(op, l, r) => {
                let (l, lt) = self.check(scope, l)?;
                let (r, rt) = self.check(scope, r)?;
                let rule = if op.is_comparison() {
                    Rule::CompBinaryOp
                } else {
                    Rule::NoncompBinaryOp
                };
                let Some((base, shape)) = lt.as_tensor() else {
                    return Err(TypeError::new(
                        rule,
                        format!("`{}` expects tensors, found `{}`", op.symbol(), pretty_type(&lt)),
                    ));
                };
                if !alpha_equal(&lt, &rt) {
                    return Err(TypeError::new(
                        rule,
                        format!(
                            "operands of `{}` differ: `{}` vs `{}`",
                            op.symbol(),
                            pretty_type(&lt),
                            pretty_type(&rt)
                        ),
                    ));
                }
                let ty = if op.is_comparison() {
                    Type::tensor(BaseType::Bool, shape.clone())
                } else if base.is_numeric() {
                    lt.clone()
                } else {
                    return Err(TypeError::new(
                        rule,
                        format!("arithmetic `{}` is not defined on `{}`", op.symbol(), pretty_type(&lt)),
                    ));
                };
                (K::Binary(*op, Box::new(l), Box::new(r)), ty)
            }
            K::Unary(op, inner) => {
                let (inner, t) = self.check(scope, inner)?;
                match t.as_tensor() {
                    Some((b, _)) if b.is_numeric() => {}
                    _ => {
                        return Err(TypeError::new(
                            Rule::UnaryOp,
                            format!("`{}` expects a numeric tensor, found `{}`", op.symbol(), pretty_type(&t)),
                        ))
                    }
                }
                (K::Unary(*op, Box::new(inner)), t)
            }
            K::Tuple(es) => {
                let mut out = Vec::with_capacity(es.len());
                let mut tys = Vec::with_capacity(es.len());
                for x in es {
                    let (x, t) = self.check(scope, x)?;
                    out.push(x);
                    tys.push(t);
                }
                (K::Tuple(out), Type::Product(tys))
            }
            K::Proj(t, i) => {
                let (t, tt) = self.check(scope, t)?;
                match &tt {
                    Type::Product(ts) if *i < ts.len() => {
                        let ty = ts[*i].clone();
                        (K::Proj(Box::new(t), *i), ty)
                    }
                    Type::Product(ts) => {
                        return Err(TypeError::new(
                            Rule::Projection,
                            format!("index {i} is out of range for a {}-tuple", ts.len()),
                        ))
                    }
                    other => {
                        return Err(TypeError::new(
                            Rule::Projection,
                            format!("projection from non-tuple type `{}`", pretty_type(other)),
                        ))
                    }
                }
            }
            K::TensorLit(es) => {
                let mut out = Vec::with_capacity(es.len());
                let mut first: Option<Type> = None;
                for x in es {
                    let (x, t) = self.check(scope, x)?;
                    if t.as_tensor().is_none() {
                        return Err(TypeError::new(
                            Rule::TensorLiteral,
                            format!("tensor literal element has non-tensor type `{}`", pretty_type(&t)),
                        )
                        .at(x.span));
                    }
                    match &first {
                        None => first = Some(t),
                        Some(f) if alpha_equal(f, &t) => {}
                        Some(f) => {
                            return Err(TypeError::new(
                                Rule::TensorLiteral,
                                format!(
                                    "tensor literal elements differ: `{}` vs `{}`",
                                    pretty_type(f),
                                    pretty_type(&t)
                                ),
                            )
                            .at(x.span))
                        }
                    }
                    out.push(x);
                }
                let Some(first) = first else {
                    return Err(TypeError::new(Rule::TensorLiteral, "empty tensor literal"));
                };
                let (b, s) = first.as_tensor().expect("checked above");
                let mut dims = vec![es.len() as u64];
                dims.extend_from_slice(s.dims());
                (K::TensorLit(out), Type::tensor(b, Shape(dims)))
            }
            K::If(c, t, f) => {
                let (c, ct) = self.check(scope, c)?;
                if !alpha_equal(&ct, &Type::scalar(BaseType::Bool)) {
                    return Err(TypeError::new(
                        Rule::If,
                        format!("condition has type `{}`, expected a Bool scalar", pretty_type(&ct)),
                    )
                    .at(c.span));
                }
                let (t, tt) = self.check(scope, t)?;
                let (f, ft) = self.check(scope, f)?;
                if !alpha_equal(&tt, &ft) {
                    return Err(TypeError::new(
                        Rule::If,
                        format!(
                            "branches differ: `{}` vs `{}`",
                            pretty_type(&tt),
                            pretty_type(&ft)
                        ),
                    ));
                }
                (K::If(Box::new(c), Box::new(t), Box::new(f)), tt)
            }
            K::Zero(t) => {
                self.expect_value_type(t, Rule::Zero, "Zero argument")?;
                if t.as_tensor().is_none() {
                    return Err(TypeError::new(
                        Rule::Zero,
                        format!("Zero needs a tensor type, found `{}`", pretty_type(t)),
                    ));
                }
                (e.kind.clone(), t.clone())
            }
            K::Grad(f) => {
                let (f, ft) = self.check(scope, f)?;
                let code = autodiff::elaborate_in(self, &f, &ft)
                    .map_err(|err| err.at(f.span))?;
                let mut closed = Scope::new();
                let saved = self.trace.take();
                let r = self.check(&mut closed, &code);
                self.trace = saved;
                let (code, ty) = r.map_err(|err| {
                    TypeError::new(
                        Rule::Gradient,
                        format!("elaborated gradient is ill-typed: {err}"),
                    )
                })?;
                (code.kind, ty)
            }
            K::RefNew(inner) => {
                let (inner, t) = self.check(scope, inner)?;
                (K::RefNew(Box::new(inner)), Type::reference(t))
            }
            K::RefRead(inner) => {
                let (inner, t) = self.check(scope, inner)?;
                let Type::Ref(content) = t else {
                    return Err(TypeError::new(
                        Rule::ValRef,
                        format!("`!` expects a reference, found `{}`", pretty_type(&t)),
                    ));
                };
                (K::RefRead(Box::new(inner)), *content)
            }
            K::RefWrite(r, v) => {
                let (r, rt) = self.check(scope, r)?;
                let (v, vt) = self.check(scope, v)?;
                match &rt {
                    Type::Ref(content) if alpha_equal(content.as_ref(), &vt) => {}
                    Type::Ref(content) => {
                        return Err(TypeError::new(
                            Rule::SetRef,
                            format!(
                                "cannot store `{}` into a reference to `{}`",
                                pretty_type(&vt),
                                pretty_type(content)
                            ),
                        ))
                    }
                    _ => {
                        return Err(TypeError::new(
                            Rule::SetRef,
                            format!("`:=` expects a reference, found `{}`", pretty_type(&rt)),
                        ))
                    }
                }
                (K::RefWrite(Box::new(r), Box::new(v)), Type::unit())
            }
            K::Function { params, ret, body } => {
                for p in params {
                    self.expect_value_type(&p.ty, Rule::FunctionDefinition, "parameter type")?;
                }
                self.expect_value_type(ret, Rule::FunctionDefinition, "return type")?;
                distinct_params(params)?;
                let depth = scope.len();
                scope.extend(params.iter().map(|p| (p.name.clone(), p.ty.clone())));
                let r = self.check(scope, body);
                scope.truncate(depth);
                let (body, bt) = r?;
                if !alpha_equal(&bt, ret) {
                    return Err(TypeError::new(
                        Rule::FunctionDefinition,
                        format!(
                            "function body has type `{}`, but the declared return type is `{}`",
                            pretty_type(&bt),
                            pretty_type(ret)
                        ),
                    ));
                }
                let ty = Type::arrow(params.iter().map(|p| p.ty.clone()).collect(), ret.clone());
                (
                    K::Function {
                        params: params.clone(),
                        ret: ret.clone(),
                        body: Box::new(body),
                    },
                    ty,
                )
            }
        })
    }

    fn check_call(
        &mut self,
        scope: &mut Scope,
        callee: &Expr,
        args: &[Expr],
    ) -> Result<(ExprKind, Type), TypeError> {
        let poly = match &callee.kind {
            ExprKind::Global(g) => match self.globals.get(g) {
                Some(t @ Type::Forall(..)) => Some(t.clone()),
                _ => None,
            },
            _ => None,
        };
        let mut callee_slot = None;
        let (callee_out, callee_ty) = match poly {
            Some(_) => {
                callee_slot = self.trace.as_mut().map(|t| {
                    t.push(Type::unit());
                    t.len() - 1
                });
                (callee.clone(), None)
            }
            None => {
                let (c, t) = self.check(scope, callee)?;
                (c, Some(t))
            }
        };
        let mut out = Vec::with_capacity(args.len());
        let mut tys = Vec::with_capacity(args.len());
        for a in args {
            let (a, t) = self.check(scope, a)?;
            out.push(a);
            tys.push(t);
        }
        let fn_ty = match (poly, callee_ty) {
            (Some(poly), _) => {
                let env = TypeEnv {
                    delta: self.delta.clone(),
                    ..TypeEnv::default()
                };
                let (_, inst) = instantiate(&env, &poly, &tys).map_err(|e| e.at(callee.span))?;
                if let (Some(trace), Some(i)) = (self.trace.as_mut(), callee_slot) {
                    trace[i] = inst.clone();
                }
                inst
            }
            (None, Some(t)) => t,
            (None, None) => unreachable!("callee is either polymorphic or checked"),
        };
        let Type::Arrow(domain, codomain) = &fn_ty else {
            return Err(TypeError::new(
                Rule::Call,
                format!("cannot call a value of type `{}`", pretty_type(&fn_ty)),
            )
            .at(callee.span));
        };
        if domain.len() != args.len() {
            return Err(TypeError::new(
                Rule::Call,
                format!(
                    "expected {} argument(s), found {}",
                    domain.len(),
                    args.len()
                ),
            ));
        }
        for (i, (d, t)) in domain.iter().zip(&tys).enumerate() {
            if !alpha_equal(d, t) {
                return Err(TypeError::new(
                    Rule::Call,
                    format!(
                        "argument {} has type `{}`, expected `{}`",
                        i + 1,
                        pretty_type(t),
                        pretty_type(d)
                    ),
                )
                .at(out[i].span));
            }
        }
        let ret = (**codomain).clone();
        Ok((ExprKind::Call(Box::new(callee_out), out), ret))
    }
}

/// Re-checks an elaborated program from scratch, recording subexpression
/// types. Anything elaboration produced must pass this.
fn verify(program: Program, registry: Arc<Registry>) -> Result<TypedProgram, Vec<TypeError>> {
    let mut checker = Checker::new(&program, registry.clone());
    let mut errors = Vec::new();
    for item in program.items() {
        match checker.check_signature(item) {
            Ok(ty) => {
                checker.globals.insert(item.name().to_string(), ty);
            }
            Err(e) => errors.push(e.at(item.span())),
        }
    }
    let mut expr_types = HashMap::new();
    for d in program.definitions() {
        checker.trace = Some(Vec::new());
        let mut scope: Scope = d.params.iter().map(|p| (p.name.clone(), p.ty.clone())).collect();
        match checker.check(&mut scope, &d.body) {
            Ok((_, ty)) if alpha_equal(&ty, &d.ret) => {
                expr_types.insert(d.name.clone(), checker.trace.take().unwrap_or_default());
            }
            Ok((_, ty)) => errors.push(
                TypeError::new(
                    Rule::FunctionDefinition,
                    format!(
                        "body of `@{}` has type `{}`, but the declared return type is `{}`",
                        d.name,
                        pretty_type(&ty),
                        pretty_type(&d.ret)
                    ),
                )
                .at(d.span),
            ),
            Err(e) => errors.push(e.at(d.span)),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    let globals = checker.globals.clone();
    Ok(TypedProgram {
        program,
        globals,
        expr_types,
        registry,
    })
}

impl FreshNames {
    pub(crate) fn reserve_expr(&mut self, e: &Expr) {
        let mut set = BTreeSet::new();
        all_local_names(e, &mut set);
        for n in set {
            self.reserve(&n);
        }
    }
}

fn distinct_params(params: &[Param]) -> Result<(), TypeError> {
    let mut seen = BTreeSet::new();
    for p in params {
        if !seen.insert(p.name.as_str()) {
            return Err(TypeError::new(
                Rule::FunctionDefinition,
                format!("parameter `{}` is bound twice", p.name),
            ));
        }
    }
    Ok(())
}
