use std::fmt;

/// Classifier of type-level terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    BaseType,
    Shape,
    Type,
}

impl Kind {
    pub fn keyword(self) -> &'static str {
        match self {
            Kind::BaseType => "BaseType",
            Kind::Shape => "Shape",
            Kind::Type => "Type",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Element type of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseType {
    Int(u32),
    UInt(u32),
    Float(u32),
    Bool,
}

impl BaseType {
    pub const F32: BaseType = BaseType::Float(32);
    pub const F64: BaseType = BaseType::Float(64);
    pub const I32: BaseType = BaseType::Int(32);

    /// Widths accepted by the kind checker.
    pub fn has_supported_width(self) -> bool {
        match self {
            BaseType::Int(w) | BaseType::UInt(w) => matches!(w, 8 | 16 | 32 | 64),
            BaseType::Float(w) => matches!(w, 32 | 64),
            BaseType::Bool => true,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, BaseType::Float(_))
    }

    pub fn is_numeric(self) -> bool {
        !matches!(self, BaseType::Bool)
    }
}

/// Tensor extents, outermost first. Empty for scalars.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Shape(pub Vec<u64>);

impl Shape {
    pub fn scalar() -> Shape {
        Shape(Vec::new())
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn dims(&self) -> &[u64] {
        &self.0
    }

    /// Number of scalar elements; 1 for rank 0.
    pub fn size(&self) -> usize {
        self.0.iter().map(|&d| d as usize).product()
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|&d| d >= 1)
    }
}

impl From<Vec<u64>> for Shape {
    fn from(dims: Vec<u64>) -> Self {
        Shape(dims)
    }
}

/// Type-level terms: base types, shapes and the types of values.
///
/// Arrow domains are stored as the element list of a product, so
/// `(A, B) -> C` and a definition `def @f(a : A, b : B) -> C` share one
/// representation and calls are uncurried against the list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Base(BaseType),
    ShapeLit(Shape),
    Tensor(Box<Type>, Box<Type>),
    Arrow(Vec<Type>, Box<Type>),
    Var(String),
    Forall(String, Kind, Box<Type>),
    Ref(Box<Type>),
    Product(Vec<Type>),
}

impl Type {
    pub fn unit() -> Type {
        Type::Product(Vec::new())
    }

    pub fn tensor(base: BaseType, shape: impl Into<Shape>) -> Type {
        Type::Tensor(
            Box::new(Type::Base(base)),
            Box::new(Type::ShapeLit(shape.into())),
        )
    }

    pub fn scalar(base: BaseType) -> Type {
        Type::tensor(base, Shape::scalar())
    }

    pub fn arrow(domain: Vec<Type>, codomain: Type) -> Type {
        Type::Arrow(domain, Box::new(codomain))
    }

    pub fn reference(inner: Type) -> Type {
        Type::Ref(Box::new(inner))
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Type::Product(ts) if ts.is_empty())
    }

    /// Base type and shape of a concrete tensor type.
    pub fn as_tensor(&self) -> Option<(BaseType, &Shape)> {
        match self {
            Type::Tensor(b, s) => match (b.as_ref(), s.as_ref()) {
                (Type::Base(b), Type::ShapeLit(s)) => Some((*b, s)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn is_float_tensor(&self) -> bool {
        self.as_tensor().is_some_and(|(b, _)| b.is_float())
    }

    pub fn is_float_scalar(&self) -> bool {
        self.as_tensor()
            .is_some_and(|(b, s)| b.is_float() && s.rank() == 0)
    }

    pub fn contains_ref(&self) -> bool {
        match self {
            Type::Ref(_) => true,
            Type::Base(_) | Type::ShapeLit(_) | Type::Var(_) => false,
            Type::Tensor(a, b) => a.contains_ref() || b.contains_ref(),
            Type::Arrow(d, c) => d.iter().any(Type::contains_ref) || c.contains_ref(),
            Type::Forall(_, _, body) => body.contains_ref(),
            Type::Product(ts) => ts.iter().any(Type::contains_ref),
        }
    }
}

impl From<BaseType> for Type {
    fn from(b: BaseType) -> Self {
        Type::Base(b)
    }
}

impl From<Shape> for Type {
    fn from(s: Shape) -> Self {
        Type::ShapeLit(s)
    }
}
