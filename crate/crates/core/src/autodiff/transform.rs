use super::{accumulate, deplete, lift_type, AdjointArgs};
use crate::ast::{pretty_type, BinOp, Definition, Expr, ExprKind, Param, Type, UnaryOp};
use crate::typecheck::{instantiate, Checker, Rule, TypeEnv, TypeError};

fn ad_error(message: impl Into<String>) -> TypeError {
    TypeError::new(Rule::Gradient, message)
}

/// One pass of the transformation under a fixed backpropagator local.
pub(crate) struct Transformer<'c> {
    checker: &'c mut Checker,
    bp: String,
    scope: Vec<(String, Type)>,
}

impl<'c> Transformer<'c> {
    pub(crate) fn new(checker: &'c mut Checker, bp: String) -> Transformer<'c> {
        Transformer {
            checker,
            bp,
            scope: Vec::new(),
        }
    }

    fn fresh(&mut self, hint: &str) -> String {
        self.checker.names.fresh(hint)
    }

    /// Name of the lifted copy of a definition, creating it on first use. The
    /// copy takes the caller's backpropagator as an extra first parameter.
    pub(crate) fn lift_global(&mut self, g: &str) -> Result<String, TypeError> {
        if let Some(name) = self.checker.lifted_name(g) {
            return Ok(name.clone());
        }
        let def = self.checker.elaborated_definition(g)?;
        let bp_ty = Type::reference(Type::arrow(vec![], Type::unit()));
        let mut lifted_ty = lift_type(&def.ty());
        if let Type::Arrow(domain, _) = &mut lifted_ty {
            domain.insert(0, bp_ty.clone());
        }
        let name = self.checker.begin_lift(g, lifted_ty);
        let bp = self.fresh("bp");
        let mut inner = Transformer::new(self.checker, bp.clone());
        inner.scope = def
            .params
            .iter()
            .map(|p| (p.name.clone(), p.ty.clone()))
            .collect();
        let (body, _) = inner.expr(&def.body)?;
        let mut params = vec![Param::new(bp, bp_ty)];
        params.extend(
            def.params
                .iter()
                .map(|p| Param::new(p.name.clone(), lift_type(&p.ty))),
        );
        self.checker.finish_lift(Definition {
            name: name.clone(),
            params,
            ret: lift_type(&def.ret),
            body,
            span: def.span,
        });
        Ok(name)
    }

    /// Transformed expression and its source type.
    pub(crate) fn expr(&mut self, e: &Expr) -> Result<(Expr, Type), TypeError> {
        let (out, ty) = self.expr_kind(e).map_err(|err| err.at(e.span))?;
        Ok((out.with_span(e.span), ty))
    }

    fn expr_kind(&mut self, e: &Expr) -> Result<(Expr, Type), TypeError> {
        use ExprKind as K;
        Ok(match &e.kind {
            K::Local(x) => {
                let ty = self
                    .scope
                    .iter()
                    .rev()
                    .find(|(v, _)| v == x)
                    .map(|(_, t)| t.clone())
                    .ok_or_else(|| ad_error(format!("free variable `{x}` under differentiation")))?;
                (e.clone(), ty)
            }
            K::Global(g) => self.global_value(g)?,
            K::Int(_) | K::Bool(_) => {
                let ty = if matches!(e.kind, K::Int(_)) {
                    Type::scalar(crate::ast::BaseType::I32)
                } else {
                    Type::scalar(crate::ast::BaseType::Bool)
                };
                (e.clone(), ty)
            }
            K::Float(_) => {
                let ty = Type::scalar(crate::ast::BaseType::F32);
                (self.record(e.clone(), &ty, |_| Vec::new()), ty)
            }
            K::Zero(t) => {
                if t.is_float_tensor() {
                    (self.record(e.clone(), t, |_| Vec::new()), t.clone())
                } else {
                    (e.clone(), t.clone())
                }
            }
            K::TensorLit(es) => self.tensor_literal(e, es)?,
            K::Call(callee, args) => self.call(callee, args)?,
            K::Let {
                binder,
                annotation,
                value,
                body,
            } => {
                let (value, vt) = self.expr(value)?;
                self.scope.push((binder.clone(), vt));
                let r = self.expr(body);
                self.scope.pop();
                let (body, bt) = r?;
                (
                    Expr::let_(binder.clone(), annotation.as_ref().map(lift_type), value, body),
                    bt,
                )
            }
            K::Cast(t, inner) => {
                let (inner, _) = self.expr(inner)?;
                (Expr::cast(lift_type(t), inner), t.clone())
            }
            K::Binary(op, l, r) => {
                let (l, lt) = self.expr(l)?;
                let (r, _) = self.expr(r)?;
                let float = lt.is_float_tensor();
                if op.is_comparison() {
                    let shape = lt.as_tensor().map(|(_, s)| s.clone()).unwrap_or_default();
                    let ty = Type::tensor(crate::ast::BaseType::Bool, shape);
                    if float {
                        (Expr::binary(*op, Expr::proj(l, 0), Expr::proj(r, 0)), ty)
                    } else {
                        (Expr::binary(*op, l, r), ty)
                    }
                } else if float {
                    (self.float_binary(*op, l, r, &lt), lt)
                } else {
                    (Expr::binary(*op, l, r), lt)
                }
            }
            K::Unary(op, inner) => {
                let (x, t) = self.expr(inner)?;
                if t.is_float_tensor() {
                    (self.float_unary(*op, x, &t), t)
                } else {
                    (Expr::unary(*op, x), t)
                }
            }
            K::Tuple(es) => {
                let mut out = Vec::with_capacity(es.len());
                let mut tys = Vec::with_capacity(es.len());
                for x in es {
                    let (x, t) = self.expr(x)?;
                    out.push(x);
                    tys.push(t);
                }
                (Expr::tuple(out), Type::Product(tys))
            }
            K::Proj(t, i) => {
                let (t, tt) = self.expr(t)?;
                let Type::Product(ts) = tt else {
                    return Err(ad_error("projection from a non-tuple"));
                };
                (Expr::proj(t, *i), ts[*i].clone())
            }
            K::If(c, t, f) => {
                let (c, _) = self.expr(c)?;
                let (t, tt) = self.expr(t)?;
                let (f, _) = self.expr(f)?;
                (Expr::if_(c, t, f), tt)
            }
            K::Grad(_) => {
                return Err(ad_error(
                    "Grad must be elaborated before the enclosing code is differentiated",
                ))
            }
            K::RefNew(inner) => {
                let (x, t) = self.expr(inner)?;
                (Expr::ref_new(x), Type::reference(t))
            }
            K::RefRead(inner) => {
                let (x, t) = self.expr(inner)?;
                let Type::Ref(content) = t else {
                    return Err(ad_error("`!` on a non-reference"));
                };
                (Expr::ref_read(x), *content)
            }
            K::RefWrite(r, v) => {
                let (r, _) = self.expr(r)?;
                let (v, _) = self.expr(v)?;
                (Expr::ref_write(r, v), Type::unit())
            }
            K::Function { params, ret, body } => {
                let depth = self.scope.len();
                self.scope
                    .extend(params.iter().map(|p| (p.name.clone(), p.ty.clone())));
                let r = self.expr(body);
                self.scope.truncate(depth);
                let (body, _) = r?;
                let lifted_params = params
                    .iter()
                    .map(|p| Param::new(p.name.clone(), lift_type(&p.ty)))
                    .collect();
                let ty = Type::arrow(params.iter().map(|p| p.ty.clone()).collect(), ret.clone());
                (Expr::function(lifted_params, lift_type(ret), body), ty)
            }
        })
    }

    /// A global used as a first-class value becomes a lambda that forwards to
    /// the lifted code under the current backpropagator.
    fn global_value(&mut self, g: &str) -> Result<(Expr, Type), TypeError> {
        let ty = self
            .checker
            .globals
            .get(g)
            .cloned()
            .ok_or_else(|| ad_error(format!("unknown global `@{g}`")))?;
        let Type::Arrow(domain, codomain) = &ty else {
            return Err(ad_error(format!(
                "global `@{g}` of type `{}` cannot be differentiated",
                pretty_type(&ty)
            )));
        };
        let names: Vec<String> = domain.iter().map(|_| self.fresh("p")).collect();
        let args: Vec<Expr> = names.iter().map(Expr::local).collect();
        let body = self.call_global(g, args, domain.clone())?.0;
        let params = names
            .iter()
            .zip(domain)
            .map(|(n, t)| Param::new(n.clone(), lift_type(t)))
            .collect();
        Ok((Expr::function(params, lift_type(codomain), body), ty))
    }

    fn call(&mut self, callee: &Expr, args: &[Expr]) -> Result<(Expr, Type), TypeError> {
        if let ExprKind::Global(g) = &callee.kind {
            let mut out = Vec::with_capacity(args.len());
            let mut tys = Vec::with_capacity(args.len());
            for a in args {
                let (a, t) = self.expr(a)?;
                out.push(a);
                tys.push(t);
            }
            return self.call_global(g, out, tys);
        }
        let (c, ct) = self.expr(callee)?;
        let Type::Arrow(_, codomain) = ct else {
            return Err(ad_error("call of a non-function"));
        };
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            out.push(self.expr(a)?.0);
        }
        Ok((Expr::call(c, out), *codomain))
    }

    /// Call of a global with already-transformed arguments.
    fn call_global(
        &mut self,
        g: &str,
        args: Vec<Expr>,
        arg_types: Vec<Type>,
    ) -> Result<(Expr, Type), TypeError> {
        if self.checker.is_definition(g) {
            let ty = self
                .checker
                .globals
                .get(g)
                .cloned()
                .ok_or_else(|| ad_error(format!("unknown global `@{g}`")))?;
            let Type::Arrow(_, codomain) = ty else {
                return Err(ad_error(format!("`@{g}` is not a function")));
            };
            let lifted = self.lift_global(g)?;
            let mut full = vec![Expr::local(&self.bp)];
            full.extend(args);
            return Ok((Expr::call(Expr::global(lifted), full), *codomain));
        }
        self.operator_call(g, args, arg_types)
    }

    fn operator_call(
        &mut self,
        op: &str,
        args: Vec<Expr>,
        arg_types: Vec<Type>,
    ) -> Result<(Expr, Type), TypeError> {
        let declared = self
            .checker
            .globals
            .get(op)
            .cloned()
            .ok_or_else(|| ad_error(format!("unknown global `@{op}`")))?;
        let (_, inst) = instantiate(&TypeEnv::new(), &declared, &arg_types)?;
        let Type::Arrow(_, codomain) = inst else {
            return Err(ad_error(format!("`@{op}` is not a function")));
        };
        let result = *codomain;
        for t in &arg_types {
            if t.as_tensor().is_none() {
                return Err(ad_error(format!(
                    "operator `@{op}` takes a `{}` argument; only tensor arguments can be differentiated",
                    pretty_type(t)
                )));
            }
        }

        let binders: Vec<String> = args.iter().map(|_| self.fresh("a")).collect();
        let values: Vec<Expr> = binders
            .iter()
            .zip(&arg_types)
            .map(|(b, t)| {
                if t.is_float_tensor() {
                    Expr::proj(Expr::local(b), 0)
                } else {
                    Expr::local(b)
                }
            })
            .collect();
        let call = Expr::call(Expr::global(op), values.clone());

        let core = if result.is_float_tensor() {
            let rule = self
                .checker
                .registry()
                .get(op)
                .and_then(|o| o.adjoint.clone())
                .ok_or_else(|| {
                    ad_error(format!(
                        "operator `@{op}` has a float result but no registered adjoint rule"
                    ))
                })?;
            for r in &rule.requires {
                self.checker.ensure_operator(r)?;
            }
            let adjoints: Vec<Option<Expr>> = binders
                .iter()
                .zip(&arg_types)
                .map(|(b, t)| t.is_float_tensor().then(|| Expr::proj(Expr::local(b), 1)))
                .collect();
            let result_ty = result.clone();
            let tys = arg_types.clone();
            self.record(call, &result, move |g| {
                rule.build(&AdjointArgs {
                    values: &values,
                    adjoints: &adjoints,
                    grad: g,
                    arg_types: &tys,
                    result_type: &result_ty,
                })
            })
        } else if result.contains_ref() || !matches!(result, Type::Tensor(..)) {
            return Err(ad_error(format!(
                "operator `@{op}` returns `{}`; only tensor results can be differentiated",
                pretty_type(&result)
            )));
        } else {
            call
        };

        let mut out = core;
        for (b, a) in binders.into_iter().zip(args).rev() {
            out = Expr::let_(b, None, a, out);
        }
        Ok((out, result))
    }

    /// Float tensor literals are constants: their elements must be literals.
    fn tensor_literal(&mut self, e: &Expr, es: &[Expr]) -> Result<(Expr, Type), TypeError> {
        let mut out = Vec::with_capacity(es.len());
        let mut first = None;
        for x in es {
            let (x, t) = self.expr(x)?;
            out.push(x);
            first.get_or_insert(t);
        }
        let first = first.ok_or_else(|| ad_error("empty tensor literal"))?;
        let (b, s) = first
            .as_tensor()
            .ok_or_else(|| ad_error("tensor literal of non-tensors"))?;
        let mut dims = vec![es.len() as u64];
        dims.extend_from_slice(s.dims());
        let ty = Type::tensor(b, crate::ast::Shape(dims));
        if !b.is_float() {
            return Ok((Expr::tensor(out), ty));
        }
        if !is_constant(e) {
            return Err(ad_error(
                "float tensor literals under Grad must contain only literals; build the tensor from parameters instead",
            ));
        }
        Ok((self.record(e.clone(), &ty, |_| Vec::new()), ty))
    }

    fn float_binary(&mut self, op: BinOp, l: Expr, r: Expr, ty: &Type) -> Expr {
        let a = self.fresh("a");
        let b = self.fresh("b");
        let av = Expr::proj(Expr::local(&a), 0);
        let bv = Expr::proj(Expr::local(&b), 0);
        let aa = Expr::proj(Expr::local(&a), 1);
        let ba = Expr::proj(Expr::local(&b), 1);
        let value = Expr::binary(op, av.clone(), bv.clone());
        let recorded = self.record(value, ty, move |g| {
            let g = g.clone();
            match op {
                BinOp::Add => vec![accumulate(&aa, g.clone()), accumulate(&ba, g)],
                BinOp::Sub => vec![accumulate(&aa, g.clone()), deplete(&ba, g)],
                BinOp::Mul => vec![
                    accumulate(&aa, Expr::binary(BinOp::Mul, g.clone(), bv)),
                    accumulate(&ba, Expr::binary(BinOp::Mul, g, av)),
                ],
                BinOp::Div => vec![
                    accumulate(&aa, Expr::binary(BinOp::Div, g.clone(), bv.clone())),
                    deplete(
                        &ba,
                        Expr::binary(
                            BinOp::Div,
                            Expr::binary(BinOp::Mul, g, av),
                            Expr::binary(BinOp::Mul, bv.clone(), bv),
                        ),
                    ),
                ],
                _ => unreachable!("comparisons are not recorded"),
            }
        });
        Expr::let_(a, None, l, Expr::let_(b, None, r, recorded))
    }

    fn float_unary(&mut self, op: UnaryOp, x: Expr, ty: &Type) -> Expr {
        let a = self.fresh("a");
        let av = Expr::proj(Expr::local(&a), 0);
        let aa = Expr::proj(Expr::local(&a), 1);
        let value = Expr::unary(op, av.clone());
        let recorded = self.record(value, ty, move |g| match op {
            UnaryOp::Neg => vec![deplete(&aa, g.clone())],
            // 2x written as x + x so the update stays in the operand's type
            UnaryOp::Sq => vec![accumulate(
                &aa,
                Expr::binary(BinOp::Mul, g.clone(), Expr::binary(BinOp::Add, av.clone(), av)),
            )],
        });
        Expr::let_(a, None, x, recorded)
    }

    /// ```text
    /// let v = value in
    /// let r = Ref (Zero ty) in
    /// let old = !bp in
    /// let _ = bp := fn() -> () { let g = !r in <updates g>; r := Zero ty; old() } in
    /// (v, r)
    /// ```
    fn record(&mut self, value: Expr, ty: &Type, updates: impl FnOnce(&Expr) -> Vec<Expr>) -> Expr {
        let v = self.fresh("v");
        let r = self.fresh("r");
        let old = self.fresh("old");
        let g = self.fresh("g");
        let installed = self.fresh("u");

        let mut stmts = updates(&Expr::local(&g));
        stmts.push(Expr::ref_write(Expr::local(&r), Expr::zero(ty.clone())));
        let mut body = Expr::call(Expr::local(&old), vec![]);
        for s in stmts.into_iter().rev() {
            body = Expr::let_(self.fresh("u"), None, s, body);
        }
        let backprop = Expr::function(
            vec![],
            Type::unit(),
            Expr::let_(g, None, Expr::ref_read(Expr::local(&r)), body),
        );

        Expr::let_(
            v.clone(),
            None,
            value,
            Expr::let_(
                r.clone(),
                None,
                Expr::ref_new(Expr::zero(ty.clone())),
                Expr::let_(
                    old,
                    None,
                    Expr::ref_read(Expr::local(&self.bp)),
                    Expr::let_(
                        installed,
                        None,
                        Expr::ref_write(Expr::local(&self.bp), backprop),
                        Expr::tuple(vec![Expr::local(v), Expr::local(r)]),
                    ),
                ),
            ),
        )
    }
}

fn is_constant(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Float(_) | ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Zero(_) => true,
        ExprKind::Unary(UnaryOp::Neg, x) => is_constant(x),
        ExprKind::TensorLit(es) => es.iter().all(is_constant),
        _ => false,
    }
}
