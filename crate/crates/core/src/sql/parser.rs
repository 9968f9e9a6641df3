//! Hand-written lexer and recursive-descent parser for the supported SQL subset.

use crate::error::{Error, Result};
use crate::ir::{AggFunc, CmpOp, SetKind};

use super::ast::*;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    /// Double-quoted identifier; never treated as a keyword.
    Quoted(String),
    Number(String),
    Str(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: &[&str] = &[
    "<>", "!=", "<=", ">=", "||", "(", ")", ",", ".", ";", "*", "=", "<", ">", "+", "-", "/",
];

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| Error::Syntax {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            }
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, &mut line, &mut col, 2);
            loop {
                if i + 1 >= chars.len() {
                    return Err(err(tl, tc, "unterminated comment".into()));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col, 2);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let word: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Ident(word.to_ascii_lowercase()),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut seen_dot = false;
            while i < chars.len() && (chars[i].is_ascii_digit() || (chars[i] == '.' && !seen_dot)) {
                if chars[i] == '.' {
                    seen_dot = true;
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            if i < chars.len() && (chars[i].is_alphabetic() || chars[i] == '_') {
                return Err(err(line, col, format!("unexpected character `{}` in number", chars[i])));
            }
            out.push(Token {
                tok: Tok::Number(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c == '\'' || c == '"' {
            let quote = c;
            advance(&mut i, &mut line, &mut col, 1);
            let mut text = String::new();
            loop {
                if i >= chars.len() {
                    return Err(err(tl, tc, "unterminated quoted text".into()));
                }
                if chars[i] == quote {
                    if chars.get(i + 1) == Some(&quote) {
                        text.push(quote);
                        advance(&mut i, &mut line, &mut col, 2);
                        continue;
                    }
                    advance(&mut i, &mut line, &mut col, 1);
                    break;
                }
                text.push(chars[i]);
                advance(&mut i, &mut line, &mut col, 1);
            }
            out.push(Token {
                tok: if quote == '\'' { Tok::Str(text) } else { Tok::Quoted(text) },
                line: tl,
                column: tc,
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = SYMBOLS
            .iter()
            .find(|s| rest.starts_with(**s))
            .ok_or_else(|| err(tl, tc, format!("unexpected character `{c}`")))?;
        advance(&mut i, &mut line, &mut col, sym.chars().count());
        out.push(Token {
            tok: Tok::Sym(sym),
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "having", "order", "limit", "union", "intersect",
    "except", "join", "inner", "left", "right", "full", "outer", "cross", "natural", "on",
    "using", "and", "or", "not", "as", "in", "is", "null", "like", "between", "exists", "all",
    "any", "some", "distinct", "by", "asc", "desc", "with", "true", "false", "case", "offset",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

/// Parse one SQL statement (an optional trailing semicolon is allowed).
pub fn parse(sql: &str) -> Result<QueryAst> {
    let mut p = Parser {
        toks: lex(sql)?,
        pos: 0,
    };
    if p.at_eof() {
        return Err(p.error("empty query"));
    }
    let q = p.query()?;
    p.eat_sym(";");
    if !p.at_eof() {
        return Err(p.error(&format!("unexpected {}", p.describe())));
    }
    Ok(q)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Quoted(s) => format!("\"{s}\""),
            Tok::Number(s) => format!("number {s}"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn error(&self, message: &str) -> Error {
        let t = &self.toks[self.pos];
        Error::Syntax {
            line: t.line,
            column: t.column,
            message: message.to_string(),
        }
    }

    fn expected(&self, what: &str) -> Error {
        self.error(&format!("expected {what}, found {}", self.describe()))
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn is_kw_at(&self, n: usize, kw: &str) -> bool {
        matches!(self.peek_at(n), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.expected(&kw.to_ascii_uppercase()))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{s}`")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            Tok::Quoted(s) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.expected("an identifier")),
        }
    }

    fn peek_ident(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !RESERVED.contains(&s.as_str()),
            Tok::Quoted(_) => true,
            _ => false,
        }
    }

    /// True when the tokens at the cursor (after any number of `(`) begin a query.
    fn parenthesized_query_ahead(&self) -> bool {
        let mut n = 0;
        while matches!(self.peek_at(n), Tok::Sym("(")) {
            n += 1;
        }
        n > 0 && (self.is_kw_at(n, "select") || self.is_kw_at(n, "with"))
    }

    fn query(&mut self) -> Result<QueryAst> {
        if self.eat_kw("with") {
            if self.is_kw("recursive") {
                return Err(self.error("recursive WITH is not supported"));
            }
            let mut bindings = Vec::new();
            loop {
                let name = self.ident()?;
                let mut columns = Vec::new();
                if self.eat_sym("(") {
                    loop {
                        columns.push(self.ident()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(")")?;
                }
                self.expect_kw("as")?;
                self.expect_sym("(")?;
                let query = self.query()?;
                self.expect_sym(")")?;
                bindings.push(Cte {
                    name,
                    columns,
                    query,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
            let body = self.query()?;
            return Ok(QueryAst::With {
                bindings,
                body: Box::new(body),
            });
        }
        let mut body = self.set_expr()?;
        let order_start = self.pos;
        let mut order_by = Vec::new();
        let mut limit = None;
        if self.eat_kw("order") {
            self.expect_kw("by")?;
            loop {
                let expr = self.expr()?;
                let desc = if self.eat_kw("desc") {
                    true
                } else {
                    self.eat_kw("asc");
                    false
                };
                order_by.push(AstOrder { expr, desc });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        if self.eat_kw("limit") {
            match self.peek().clone() {
                Tok::Number(n) => {
                    limit = Some(n.parse::<u64>().map_err(|_| self.expected("a row count"))?);
                    self.pos += 1;
                }
                _ => return Err(self.expected("a row count")),
            }
        }
        if !order_by.is_empty() || limit.is_some() {
            match &mut body {
                QueryAst::Select(s) if s.order_by.is_empty() && s.limit.is_none() => {
                    s.order_by = order_by;
                    s.limit = limit;
                }
                _ => {
                    let t = &self.toks[order_start];
                    return Err(Error::Syntax {
                        line: t.line,
                        column: t.column,
                        message: "ORDER BY or LIMIT applied to a set operation is not supported"
                            .into(),
                    });
                }
            }
        }
        Ok(body)
    }

    fn set_quantifier(&mut self) -> bool {
        if self.eat_kw("all") {
            true
        } else {
            self.eat_kw("distinct");
            false
        }
    }

    fn set_expr(&mut self) -> Result<QueryAst> {
        let mut left = self.set_term()?;
        loop {
            let kind = if self.eat_kw("union") {
                SetKind::Union
            } else if self.eat_kw("except") {
                SetKind::Except
            } else {
                return Ok(left);
            };
            let all = self.set_quantifier();
            let right = self.set_term()?;
            left = QueryAst::SetOp {
                kind,
                all,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
    }

    fn set_term(&mut self) -> Result<QueryAst> {
        let mut left = self.set_primary()?;
        while self.eat_kw("intersect") {
            let all = self.set_quantifier();
            let right = self.set_primary()?;
            left = QueryAst::SetOp {
                kind: SetKind::Intersect,
                all,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn set_primary(&mut self) -> Result<QueryAst> {
        if self.eat_sym("(") {
            let q = self.query()?;
            self.expect_sym(")")?;
            return Ok(q);
        }
        if self.is_kw("select") {
            return Ok(QueryAst::Select(Box::new(self.select_block()?)));
        }
        Err(self.expected("SELECT"))
    }

    fn select_block(&mut self) -> Result<SelectBlock> {
        self.expect_kw("select")?;
        let mut b = SelectBlock::default();
        if self.eat_kw("distinct") {
            b.distinct = true;
        } else {
            self.eat_kw("all");
        }
        loop {
            b.projections.push(self.select_item()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        if self.eat_kw("from") {
            loop {
                b.from.push(self.from_item()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        if self.eat_kw("where") {
            b.where_pred = Some(self.expr()?);
        }
        if self.eat_kw("group") {
            self.expect_kw("by")?;
            loop {
                b.group_by.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        if self.eat_kw("having") {
            b.having = Some(self.expr()?);
        }
        Ok(b)
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        if self.eat_sym("*") {
            return Ok(SelectItem::Wildcard);
        }
        if self.peek_ident() && matches!(self.peek_at(1), Tok::Sym(".")) && matches!(self.peek_at(2), Tok::Sym("*")) {
            let q = self.ident()?;
            self.pos += 2;
            return Ok(SelectItem::QualifiedWildcard(q));
        }
        let expr = self.expr()?;
        let alias = if self.eat_kw("as") {
            Some(self.ident()?)
        } else if self.peek_ident() {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(SelectItem::Expr { expr, alias })
    }

    fn alias(&mut self) -> Result<Option<String>> {
        if self.eat_kw("as") {
            return Ok(Some(self.ident()?));
        }
        if self.peek_ident() {
            return Ok(Some(self.ident()?));
        }
        Ok(None)
    }

    fn from_item(&mut self) -> Result<FromItem> {
        let mut left = self.table_primary()?;
        loop {
            let natural = self.eat_kw("natural");
            let op = if self.eat_kw("join") {
                JoinOp::Inner
            } else if self.is_kw("inner") {
                self.pos += 1;
                self.expect_kw("join")?;
                JoinOp::Inner
            } else if self.is_kw("left") || self.is_kw("right") || self.is_kw("full") {
                let op = if self.eat_kw("left") {
                    JoinOp::Left
                } else if self.eat_kw("right") {
                    JoinOp::Right
                } else {
                    self.pos += 1;
                    JoinOp::Full
                };
                self.eat_kw("outer");
                self.expect_kw("join")?;
                op
            } else if self.is_kw("cross") {
                self.pos += 1;
                self.expect_kw("join")?;
                JoinOp::Cross
            } else if natural {
                return Err(self.expected("JOIN"));
            } else {
                return Ok(left);
            };
            let right = self.table_primary()?;
            let constraint = if natural || op == JoinOp::Cross {
                JoinConstraint::None
            } else if self.eat_kw("on") {
                JoinConstraint::On(self.expr()?)
            } else if self.eat_kw("using") {
                self.expect_sym("(")?;
                let mut cols = Vec::new();
                loop {
                    cols.push(self.ident()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(")")?;
                JoinConstraint::Using(cols)
            } else {
                return Err(self.expected("ON or USING"));
            };
            left = FromItem::Join {
                left: Box::new(left),
                right: Box::new(right),
                op,
                natural,
                constraint,
            };
        }
    }

    fn table_primary(&mut self) -> Result<FromItem> {
        if self.is_sym("(") {
            if self.parenthesized_query_ahead() {
                let start = self.pos;
                self.pos += 1;
                match self.query().and_then(|q| self.expect_sym(")").map(|_| q)) {
                    Ok(q) => {
                        let alias = self.alias()?;
                        let mut columns = Vec::new();
                        if alias.is_some() && self.eat_sym("(") {
                            loop {
                                columns.push(self.ident()?);
                                if !self.eat_sym(",") {
                                    break;
                                }
                            }
                            self.expect_sym(")")?;
                        }
                        return Ok(FromItem::Subquery {
                            query: Box::new(q),
                            alias,
                            columns,
                        });
                    }
                    Err(e) => {
                        // `((SELECT ...) x JOIN ...)` is a nested join, not a query.
                        self.pos = start;
                        let save = self.pos;
                        self.pos += 1;
                        let nested = self.from_item();
                        if let Ok(item) = nested {
                            if self.eat_sym(")") {
                                let alias = self.alias()?;
                                return Ok(FromItem::Nested {
                                    item: Box::new(item),
                                    alias,
                                });
                            }
                        }
                        self.pos = save;
                        return Err(e);
                    }
                }
            }
            self.pos += 1;
            let item = self.from_item()?;
            self.expect_sym(")")?;
            let alias = self.alias()?;
            return Ok(FromItem::Nested {
                item: Box::new(item),
                alias,
            });
        }
        let name = self.ident()?;
        let alias = self.alias()?;
        Ok(FromItem::Table { name, alias })
    }

    pub fn expr(&mut self) -> Result<AstExpr> {
        let mut left = self.and_expr()?;
        while self.eat_kw("or") {
            let right = self.and_expr()?;
            left = AstExpr::Binary {
                op: BinOp::Or,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<AstExpr> {
        let mut left = self.not_expr()?;
        while self.eat_kw("and") {
            let right = self.not_expr()?;
            left = AstExpr::Binary {
                op: BinOp::And,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<AstExpr> {
        if self.is_kw("not") && self.is_kw_at(1, "exists") {
            self.pos += 2;
            let query = self.paren_query()?;
            return Ok(AstExpr::Exists {
                query: Box::new(query),
                negated: true,
            });
        }
        if self.eat_kw("not") {
            let inner = self.not_expr()?;
            return Ok(AstExpr::Not(Box::new(inner)));
        }
        self.predicate()
    }

    fn paren_query(&mut self) -> Result<QueryAst> {
        self.expect_sym("(")?;
        let q = self.query()?;
        self.expect_sym(")")?;
        Ok(q)
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("<>") | Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return None,
        };
        self.pos += 1;
        Some(op)
    }

    fn predicate(&mut self) -> Result<AstExpr> {
        let left = self.additive()?;
        if let Some(op) = self.cmp_op() {
            let quant = if self.eat_kw("all") {
                Some(true)
            } else if self.eat_kw("some") || self.eat_kw("any") {
                Some(false)
            } else {
                None
            };
            if let Some(all) = quant {
                let query = self.paren_query()?;
                return Ok(AstExpr::Quantified {
                    left: Box::new(left),
                    op,
                    all,
                    query: Box::new(query),
                });
            }
            let right = self.additive()?;
            return Ok(AstExpr::Binary {
                op: BinOp::Cmp(op),
                left: Box::new(left),
                right: Box::new(right),
            });
        }
        if self.eat_kw("is") {
            let negated = self.eat_kw("not");
            self.expect_kw("null")?;
            return Ok(AstExpr::IsNull {
                expr: Box::new(left),
                negated,
            });
        }
        let negated = if self.is_kw("not")
            && (self.is_kw_at(1, "in") || self.is_kw_at(1, "like") || self.is_kw_at(1, "between"))
        {
            self.pos += 1;
            true
        } else {
            false
        };
        if self.eat_kw("between") {
            let low = self.additive()?;
            self.expect_kw("and")?;
            let high = self.additive()?;
            return Ok(AstExpr::Between {
                expr: Box::new(left),
                low: Box::new(low),
                high: Box::new(high),
                negated,
            });
        }
        if self.eat_kw("like") {
            let pattern = self.additive()?;
            return Ok(AstExpr::Like {
                expr: Box::new(left),
                pattern: Box::new(pattern),
                negated,
            });
        }
        if self.eat_kw("in") {
            if self.parenthesized_query_ahead() {
                let save = self.pos;
                if let Ok(q) = self.paren_query() {
                    return Ok(AstExpr::InSubquery {
                        expr: Box::new(left),
                        query: Box::new(q),
                        negated,
                    });
                }
                self.pos = save;
            }
            self.expect_sym("(")?;
            let mut list = Vec::new();
            loop {
                list.push(self.additive()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
            return Ok(AstExpr::InList {
                expr: Box::new(left),
                list,
                negated,
            });
        }
        if negated {
            return Err(self.expected("IN, LIKE or BETWEEN"));
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<AstExpr> {
        let mut left = self.multiplicative()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Plus
            } else if self.eat_sym("-") {
                BinOp::Minus
            } else {
                return Ok(left);
            };
            let right = self.multiplicative()?;
            left = AstExpr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
    }

    fn multiplicative(&mut self) -> Result<AstExpr> {
        let mut left = self.unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else {
                return Ok(left);
            };
            let right = self.unary()?;
            left = AstExpr::Binary {
                op,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
    }

    fn unary(&mut self) -> Result<AstExpr> {
        if self.eat_sym("-") {
            if let Tok::Number(n) = self.peek().clone() {
                self.pos += 1;
                return Ok(AstExpr::Number(format!("-{n}")));
            }
            let inner = self.unary()?;
            return Ok(AstExpr::Neg(Box::new(inner)));
        }
        if self.eat_sym("+") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<AstExpr> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.pos += 1;
                Ok(AstExpr::Number(n))
            }
            Tok::Str(s) => {
                self.pos += 1;
                Ok(AstExpr::Str(s))
            }
            Tok::Sym("(") => {
                if self.parenthesized_query_ahead() {
                    let save = self.pos;
                    if let Ok(q) = self.paren_query() {
                        return Ok(AstExpr::Subquery(Box::new(q)));
                    }
                    self.pos = save;
                }
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(ref w) if w == "exists" => {
                self.pos += 1;
                let q = self.paren_query()?;
                Ok(AstExpr::Exists {
                    query: Box::new(q),
                    negated: false,
                })
            }
            Tok::Ident(ref w) if w == "null" => {
                self.pos += 1;
                Ok(AstExpr::Null)
            }
            Tok::Ident(ref w) if w == "true" || w == "false" => {
                self.pos += 1;
                Ok(AstExpr::Bool(w == "true"))
            }
            Tok::Ident(_) | Tok::Quoted(_) => {
                if let (Tok::Ident(name), Tok::Sym("(")) = (self.peek().clone(), self.peek_at(1).clone()) {
                    if !RESERVED.contains(&name.as_str()) {
                        self.pos += 2;
                        return self.call(name);
                    }
                }
                let first = self.ident()?;
                if self.eat_sym(".") {
                    let name = self.ident()?;
                    Ok(AstExpr::Column {
                        qualifier: Some(first),
                        name,
                    })
                } else {
                    Ok(AstExpr::Column {
                        qualifier: None,
                        name: first,
                    })
                }
            }
            _ => Err(self.expected("an expression")),
        }
    }

    fn call(&mut self, name: String) -> Result<AstExpr> {
        if let Some(func) = AggFunc::from_name(&name) {
            if func == AggFunc::Count && self.eat_sym("*") {
                self.expect_sym(")")?;
                return Ok(AstExpr::Agg {
                    func,
                    distinct: false,
                    arg: None,
                });
            }
            let distinct = if self.eat_kw("distinct") {
                true
            } else {
                self.eat_kw("all");
                false
            };
            let arg = self.expr()?;
            self.expect_sym(")")?;
            return Ok(AstExpr::Agg {
                func,
                distinct,
                arg: Some(Box::new(arg)),
            });
        }
        let mut args = Vec::new();
        if !self.eat_sym(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        }
        Ok(AstExpr::Func { name, args })
    }
}


pub(crate) fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}
