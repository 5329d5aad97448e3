//! Canonical serialization. Byte length of this output is the code-size metric,
//! so the layout is fixed: four-space indent, one statement per line, one
//! blank line between functions, minimal parentheses.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn serialize(p: &Program) -> String {
    let mut out = String::new();
    for (i, f) in p.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write_function(&mut out, f);
    }
    out
}

pub fn serialize_function(f: &Function) -> String {
    let mut out = String::new();
    write_function(&mut out, f);
    out
}

fn write_function(out: &mut String, f: &Function) {
    let _ = writeln!(out, "fn {}({}) {{", f.name, f.params.join(", "));
    write_body(out, &f.body, 1);
    out.push_str("}\n");
}

fn write_body(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        write_stmt(out, s, depth);
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match s {
        Stmt::Assign { var, value } => {
            let _ = writeln!(out, "{var} = {};", expr_to_string(value));
        }
        Stmt::Alloc { var } => {
            let _ = writeln!(out, "{var} = node();");
        }
        Stmt::FieldStore { var, field, value } => {
            let _ = writeln!(out, "{var}.{} = {};", field.as_str(), expr_to_string(value));
        }
        Stmt::If {
            cond,
            then_body,
            else_body,
        } => {
            let _ = writeln!(out, "if ({}) {{", expr_to_string(cond));
            write_body(out, then_body, depth + 1);
            indent(out, depth);
            if else_body.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                write_body(out, else_body, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
        Stmt::While { cond, body } => {
            let _ = writeln!(out, "while ({}) {{", expr_to_string(cond));
            write_body(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        Stmt::Call { name, args } => {
            let _ = writeln!(out, "{name}({});", args_to_string(args));
        }
        Stmt::Return(e) => {
            let _ = writeln!(out, "return {};", expr_to_string(e));
        }
        Stmt::Print(e) => {
            let _ = writeln!(out, "print({});", expr_to_string(e));
        }
    }
}

fn args_to_string(args: &[Expr]) -> String {
    args.iter().map(expr_to_string).collect::<Vec<_>>().join(", ")
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

/// Writes `e` as the operand of an operator with precedence `ctx`
/// (0 = no enclosing operator). `ctx` is bumped by one for right operands so
/// left-associativity survives a round trip.
pub fn write_expr(out: &mut String, e: &Expr, ctx: u8) {
    match e {
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Null => out.push_str("null"),
        Expr::Var(v) => out.push_str(v),
        Expr::Field(v, f) => {
            let _ = write!(out, "{v}.{}", f.as_str());
        }
        Expr::IsNull(v) => {
            let _ = write!(out, "is_null({v})");
        }
        Expr::Call(name, args) => {
            let _ = write!(out, "{name}({})", args_to_string(args));
        }
        Expr::Binary(op, a, b) => {
            let prec = op.precedence();
            let paren = prec < ctx;
            if paren {
                out.push('(');
            }
            write_expr(out, a, prec);
            let _ = write!(out, " {op} ");
            write_expr(out, b, prec + 1);
            if paren {
                out.push(')');
            }
        }
    }
}
