use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("jet order {0} outside 0..=4")]
    OrderOutOfRange(usize),
    #[error("division by a jet with vanishing value")]
    DivisionByZero,
    #[error("{op}: argument {value} is within the branch-cut guard")]
    BranchCut { op: &'static str, value: Complex64 },
    #[error("{op}: argument is zero")]
    ZeroArgument { op: &'static str },
    #[error("derivative pattern of length {len} exceeds jet order {order}")]
    PatternTooLong { len: usize, order: usize },
    #[error("invalid derivative pattern {0:?}")]
    InvalidPattern(String),
    #[error("evaluation point {0} is too close to a pole")]
    PoleProximity(Complex64),
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("Newton iteration did not converge in {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Hessian, |det| = {0:e}")]
    SingularHessian(f64),
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("singular co-frame: {0}")]
    SingularCoframe(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("insufficient sampling: {got} points, at least {need} required")]
    InsufficientSampling { got: usize, need: usize },
    #[error("no curvature convention is consistent: {0}")]
    NoConvention(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
