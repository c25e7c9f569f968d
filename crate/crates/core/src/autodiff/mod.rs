//! Reverse-mode differentiation as a source-to-source transformation.
//!
//! Every float tensor is paired with a reference holding its adjoint, and a
//! backpropagator reference (`RefType(() -> ())`) accumulates closures that
//! push adjoints upstream. `Grad` is elaborated into ordinary IR that runs the
//! lifted function, seeds the result adjoint with ones, runs the
//! backpropagator and reads the argument adjoints back.

mod transform;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::ast::{free_vars, pretty_type, BinOp, Expr, ExprKind, Param, Program, Type};
use crate::eval::Registry;
use crate::typecheck::{Checker, Rule, TypeError};

pub(crate) use transform::Transformer;

/// Float tensors become `(value, RefType(adjoint))`; everything else is
/// mapped structurally. References are lifted through, which is what lets
/// already-elaborated gradient code be differentiated again.
pub fn lift_type(t: &Type) -> Type {
    match t {
        _ if t.is_float_tensor() => Type::Product(vec![t.clone(), Type::reference(t.clone())]),
        Type::Arrow(d, c) => Type::arrow(d.iter().map(lift_type).collect(), lift_type(c)),
        Type::Product(ts) => Type::Product(ts.iter().map(lift_type).collect()),
        Type::Ref(inner) => Type::reference(lift_type(inner)),
        _ => t.clone(),
    }
}

/// Grad operands must not capture locals.
pub fn assert_closed(e: &Expr) -> Result<(), TypeError> {
    let free = free_vars(e);
    if free.is_empty() {
        return Ok(());
    }
    let names: Vec<String> = free.into_iter().map(|v| format!("`{v}`")).collect();
    Err(TypeError::new(
        Rule::Gradient,
        format!(
            "differentiated function captures free variable(s) {}; lambda-lift them into parameters or a global definition",
            names.join(", ")
        ),
    )
    .at(e.span))
}

/// Source of binder names that collide with nothing in the program.
#[derive(Debug, Clone, Default)]
pub struct FreshNames {
    taken: HashSet<String>,
    globals: HashSet<String>,
    counter: u64,
}

impl FreshNames {
    pub fn reserve(&mut self, name: &str) {
        self.taken.insert(name.to_string());
    }

    pub fn reserve_global(&mut self, name: &str) {
        self.globals.insert(name.to_string());
    }

    /// `_hintN` for the next free `N`.
    pub fn fresh(&mut self, hint: &str) -> String {
        loop {
            self.counter += 1;
            let name = format!("_{hint}{}", self.counter);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    /// `base`, then `base2`, `base3`, ...
    pub fn fresh_global(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut n = 1;
        while self.globals.contains(&name) {
            n += 1;
            name = format!("{base}{n}");
        }
        self.globals.insert(name.clone());
        name
    }
}

/// Everything an adjoint builder can refer to at one operator call site.
pub struct AdjointArgs<'a> {
    /// Argument values (plain, unlifted expressions; cheap to duplicate).
    pub values: &'a [Expr],
    /// Adjoint references of float-tensor arguments.
    pub adjoints: &'a [Option<Expr>],
    /// Adjoint of the call's result.
    pub grad: &'a Expr,
    pub arg_types: &'a [Type],
    pub result_type: &'a Type,
}

type AdjointBuilder = dyn Fn(&AdjointArgs<'_>) -> Vec<Expr> + Send + Sync;

/// How an operator's result adjoint flows back into its arguments. The
/// builder emits unit-typed statements; `requires` names operators the
/// statements call, so elaboration can declare them.
#[derive(Clone)]
pub struct AdjointRule {
    pub requires: Vec<String>,
    build: Arc<AdjointBuilder>,
}

impl AdjointRule {
    pub fn new(
        requires: &[&str],
        build: impl Fn(&AdjointArgs<'_>) -> Vec<Expr> + Send + Sync + 'static,
    ) -> AdjointRule {
        AdjointRule {
            requires: requires.iter().map(|s| s.to_string()).collect(),
            build: Arc::new(build),
        }
    }

    /// Operators with no differentiable dependence on their arguments.
    pub fn constant() -> AdjointRule {
        AdjointRule::new(&[], |_| Vec::new())
    }

    pub fn build(&self, args: &AdjointArgs<'_>) -> Vec<Expr> {
        (self.build)(args)
    }
}

impl fmt::Debug for AdjointRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdjointRule")
            .field("requires", &self.requires)
            .finish_non_exhaustive()
    }
}

/// `adj := !adj + delta`
pub fn accumulate(adj: &Expr, delta: Expr) -> Expr {
    Expr::ref_write(
        adj.clone(),
        Expr::binary(BinOp::Add, Expr::ref_read(adj.clone()), delta),
    )
}

/// `adj := !adj - delta`
pub fn deplete(adj: &Expr, delta: Expr) -> Expr {
    Expr::ref_write(
        adj.clone(),
        Expr::binary(BinOp::Sub, Expr::ref_read(adj.clone()), delta),
    )
}

/// Transformation context: the backpropagator reference plus the program
/// whose definitions may be lifted. Lifted definitions accumulate here.
pub struct AdContext {
    checker: Checker,
    backprop: String,
}

impl AdContext {
    /// `backprop` names a local of type `RefType(() -> ())` that the
    /// transformed code will extend.
    pub fn new(program: &Program, registry: Arc<Registry>, backprop: &str) -> AdContext {
        let mut checker = Checker::new(program, registry);
        for item in program.items() {
            checker.globals.insert(item.name().to_string(), item.ty());
        }
        checker.names.reserve(backprop);
        AdContext {
            checker,
            backprop: backprop.to_string(),
        }
    }

    /// Source-program definitions lifted so far.
    pub fn lifted_definitions(&mut self) -> Vec<crate::ast::Definition> {
        self.checker.generated_definitions()
    }
}

/// Transforms a closed, well-typed expression. Returns the lifted expression
/// and its source type.
pub fn transform(e: &Expr, ctx: &mut AdContext) -> Result<(Expr, Type), TypeError> {
    assert_closed(e)?;
    ctx.checker.names.reserve_expr(e);
    let bp = ctx.backprop.clone();
    Transformer::new(&mut ctx.checker, bp).expr(e)
}

/// Elaborates `Grad fn` for a stand-alone function literal.
pub fn elaborate_grad(f: &Expr, fn_type: &Type) -> Result<Expr, TypeError> {
    let mut checker = Checker::new(&Program::default(), Arc::new(Registry::builtin()));
    checker.names.reserve_expr(f);
    elaborate_in(&mut checker, f, fn_type)
}

/// The function built for `Grad f` at type `(T1, ..., Tn) -> R`:
///
/// ```text
/// fn(x1 : T1, ...) -> (R, (T1, ...)) {
///   let bp = Ref (fn() -> () { () }) in
///   let a1 = (x1, Ref (Zero T1)) in ...
///   let res = F'(a1, ...) in
///   res[1] := @ones_like(res[0]); (!bp)();
///   let g1 = !a1[1] in ...; a1[1] := Zero T1; ...
///   (res[0], (g1, ...))
/// }
/// ```
pub(crate) fn elaborate_in(checker: &mut Checker, f: &Expr, fn_type: &Type) -> Result<Expr, TypeError> {
    let Type::Arrow(domain, codomain) = fn_type else {
        return Err(TypeError::new(
            Rule::Gradient,
            format!("Grad expects a function, found `{}`", pretty_type(fn_type)),
        ));
    };
    if !codomain.is_float_scalar() {
        return Err(TypeError::new(
            Rule::Gradient,
            format!(
                "Grad needs a function with a scalar float result, found result type `{}`",
                pretty_type(codomain)
            ),
        ));
    }
    for (i, d) in domain.iter().enumerate() {
        if !d.is_float_tensor() {
            return Err(TypeError::new(
                Rule::Gradient,
                format!(
                    "Grad differentiates float tensor parameters only; parameter {} has type `{}`",
                    i + 1,
                    pretty_type(d)
                ),
            ));
        }
    }
    match &f.kind {
        ExprKind::Global(g) if checker.is_definition(g) => {}
        ExprKind::Global(g) => {
            return Err(TypeError::new(
                Rule::Gradient,
                format!("Grad over operator `@{g}`: wrap the call in a function literal"),
            ))
        }
        ExprKind::Function { .. } => assert_closed(f)?,
        _ => {
            return Err(TypeError::new(
                Rule::Gradient,
                "Grad expects a global definition or a function literal",
            ))
        }
    }
    checker.ensure_operator("ones_like")?;

    let names = &mut checker.names;
    let bp = names.fresh("bp");
    let xs: Vec<String> = domain.iter().map(|_| names.fresh("x")).collect();
    let pairs: Vec<String> = domain.iter().map(|_| names.fresh("a")).collect();
    let grads: Vec<String> = domain.iter().map(|_| names.fresh("g")).collect();
    let res = names.fresh("res");

    let callee = {
        let mut tr = Transformer::new(checker, bp.clone());
        match &f.kind {
            ExprKind::Global(g) => Expr::global(tr.lift_global(g)?),
            _ => tr.expr(f)?.0,
        }
    };
    let is_global = matches!(f.kind, ExprKind::Global(_));
    let mut call_args: Vec<Expr> = pairs.iter().map(Expr::local).collect();
    if is_global {
        call_args.insert(0, Expr::local(&bp));
    }

    let adjoint_of = |a: &String| Expr::proj(Expr::local(a), 1);
    let mut tail = Expr::tuple(vec![
        Expr::proj(Expr::local(&res), 0),
        Expr::tuple(grads.iter().map(Expr::local).collect()),
    ]);
    for (a, t) in pairs.iter().zip(domain).rev() {
        let u = checker.names.fresh("u");
        tail = Expr::let_(u, None, Expr::ref_write(adjoint_of(a), Expr::zero(t.clone())), tail);
    }
    for (g, a) in grads.iter().zip(&pairs).rev() {
        tail = Expr::let_(g.clone(), None, Expr::ref_read(adjoint_of(a)), tail);
    }
    let run = checker.names.fresh("u");
    tail = Expr::let_(
        run,
        None,
        Expr::call(Expr::ref_read(Expr::local(&bp)), vec![]),
        tail,
    );
    let seed = checker.names.fresh("u");
    tail = Expr::let_(
        seed,
        None,
        Expr::ref_write(
            Expr::proj(Expr::local(&res), 1),
            Expr::call(
                Expr::global("ones_like"),
                vec![Expr::proj(Expr::local(&res), 0)],
            ),
        ),
        tail,
    );
    tail = Expr::let_(res.clone(), None, Expr::call(callee, call_args), tail);
    for ((a, x), t) in pairs.iter().zip(&xs).zip(domain).rev() {
        tail = Expr::let_(
            a.clone(),
            None,
            Expr::tuple(vec![
                Expr::local(x),
                Expr::ref_new(Expr::zero(t.clone())),
            ]),
            tail,
        );
    }
    tail = Expr::let_(
        bp,
        None,
        Expr::ref_new(Expr::function(vec![], Type::unit(), Expr::unit())),
        tail,
    );
    let params = xs
        .iter()
        .zip(domain)
        .map(|(x, t)| Param::new(x.clone(), t.clone()))
        .collect();
    let ret = Type::Product(vec![(**codomain).clone(), Type::Product(domain.clone())]);
    Ok(Expr::function(params, ret, tail).with_span(f.span))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::BaseType;

    #[test]
    fn lift_float_scalar() {
        let f = Type::scalar(BaseType::F64);
        assert_eq!(
            lift_type(&f),
            Type::Product(vec![f.clone(), Type::reference(f)])
        );
    }

    #[test]
    fn lift_leaves_ints() {
        let i = Type::scalar(BaseType::I32);
        assert_eq!(lift_type(&i), i);
    }

    #[test]
    fn lift_arrow() {
        let f = Type::scalar(BaseType::F64);
        let lf = lift_type(&f);
        assert_eq!(
            lift_type(&Type::arrow(vec![f.clone()], f)),
            Type::arrow(vec![lf.clone()], lf)
        );
    }

    #[test]
    fn lifting_is_not_idempotent() {
        let f = Type::scalar(BaseType::F32);
        assert_ne!(lift_type(&lift_type(&f)), lift_type(&f));
    }

    #[test]
    fn fresh_names_skip_reserved() {
        let mut n = FreshNames::default();
        n.reserve("_t1");
        assert_eq!(n.fresh("t"), "_t2");
        n.reserve_global("f_ad");
        assert_eq!(n.fresh_global("f_ad"), "f_ad2");
    }
}
