//! Unresolved syntax tree produced by the parser.

use crate::ir::{AggFunc, CmpOp, SetKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryAst {
    Select(Box<SelectBlock>),
    SetOp {
        kind: SetKind,
        all: bool,
        left: Box<QueryAst>,
        right: Box<QueryAst>,
    },
    With {
        bindings: Vec<Cte>,
        body: Box<QueryAst>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cte {
    pub name: String,
    pub columns: Vec<String>,
    pub query: QueryAst,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SelectBlock {
    pub distinct: bool,
    pub projections: Vec<SelectItem>,
    pub from: Vec<FromItem>,
    pub where_pred: Option<AstExpr>,
    pub group_by: Vec<AstExpr>,
    pub having: Option<AstExpr>,
    pub order_by: Vec<AstOrder>,
    pub limit: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AstOrder {
    pub expr: AstExpr,
    pub desc: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectItem {
    Expr { expr: AstExpr, alias: Option<String> },
    Wildcard,
    QualifiedWildcard(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JoinOp {
    Inner,
    Left,
    Right,
    Full,
    Cross,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JoinConstraint {
    On(AstExpr),
    Using(Vec<String>),
    None,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FromItem {
    Table {
        name: String,
        alias: Option<String>,
    },
    Subquery {
        query: Box<QueryAst>,
        alias: Option<String>,
        columns: Vec<String>,
    },
    Join {
        left: Box<FromItem>,
        right: Box<FromItem>,
        op: JoinOp,
        natural: bool,
        constraint: JoinConstraint,
    },
    /// Parenthesized join, optionally aliased.
    Nested {
        item: Box<FromItem>,
        alias: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    And,
    Or,
    Cmp(CmpOp),
    Plus,
    Minus,
    Mul,
    Div,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AstExpr {
    Column {
        qualifier: Option<String>,
        name: String,
    },
    Number(String),
    Str(String),
    Bool(bool),
    Null,
    Agg {
        func: AggFunc,
        distinct: bool,
        arg: Option<Box<AstExpr>>,
    },
    Func {
        name: String,
        args: Vec<AstExpr>,
    },
    Binary {
        op: BinOp,
        left: Box<AstExpr>,
        right: Box<AstExpr>,
    },
    Neg(Box<AstExpr>),
    Not(Box<AstExpr>),
    IsNull {
        expr: Box<AstExpr>,
        negated: bool,
    },
    Between {
        expr: Box<AstExpr>,
        low: Box<AstExpr>,
        high: Box<AstExpr>,
        negated: bool,
    },
    InList {
        expr: Box<AstExpr>,
        list: Vec<AstExpr>,
        negated: bool,
    },
    InSubquery {
        expr: Box<AstExpr>,
        query: Box<QueryAst>,
        negated: bool,
    },
    Like {
        expr: Box<AstExpr>,
        pattern: Box<AstExpr>,
        negated: bool,
    },
    Exists {
        query: Box<QueryAst>,
        negated: bool,
    },
    Quantified {
        left: Box<AstExpr>,
        op: CmpOp,
        all: bool,
        query: Box<QueryAst>,
    },
    Subquery(Box<QueryAst>),
}
