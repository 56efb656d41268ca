"""Parser for form files.

Form files use Python syntax but are never executed.  The text is parsed with
:mod:`ast` and walked by a small interpreter that only understands element and
function declarations, constant arithmetic, the form operators and
single-expression macro definitions (``def epsilon(v): return ...``).
The grammar is documented in ``docs/form_language.md``.
"""
import ast
import operator
from numbers import Number

from ..errors import FormError, FormSyntaxError
from . import dsl

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


class _Macro:
    def __init__(self, node, interpreter):
        self.node = node
        self.params = [a.arg for a in node.args.args]
        self.interpreter = interpreter

    def __call__(self, *args):
        if len(args) != len(self.params):
            raise FormSyntaxError(
                f"{self.node.name}() takes {len(self.params)} arguments, got {len(args)}",
                self.node.lineno,
                self.node.col_offset + 1,
            )
        ret = self.node.body[-1]
        scope = dict(zip(self.params, args))
        return self.interpreter.eval(ret.value, scope)


def _builtins():
    env = {
        "FiniteElement": dsl.FiniteElement,
        "VectorElement": dsl.VectorElement,
        "BasisFunction": dsl.BasisFunction,
        "TestFunction": dsl.BasisFunction,
        "TrialFunction": dsl.BasisFunction,
        "Function": dsl.Function,
        "Index": dsl.Index,
        "dot": dsl.dot,
        "inner": dsl.dot,
        "grad": dsl.grad,
        "div": dsl.div,
        "transp": dsl.transp,
        "mult": dsl.mult,
        "trace": dsl.trace,
        "Identity": dsl.Identity,
        "D": dsl.D,
        "len": len,
        "abs": abs,
        "dx": dsl.dx,
    }
    for name in "ijklpqrs":
        env[name] = dsl.Index(name)
    return env


class _Interpreter:
    def __init__(self):
        self.env = _builtins()

    def fail(self, message, node):
        return FormSyntaxError(message, getattr(node, "lineno", None), getattr(node, "col_offset", -1) + 1)

    def run(self, tree):
        for stmt in tree.body:
            if isinstance(stmt, ast.Assign):
                if len(stmt.targets) != 1 or not isinstance(stmt.targets[0], ast.Name):
                    raise self.fail("only simple assignments 'name = expression' are allowed", stmt)
                self.env[stmt.targets[0].id] = self.eval(stmt.value)
            elif isinstance(stmt, ast.FunctionDef):
                self.define(stmt)
            elif isinstance(stmt, ast.Expr) and isinstance(stmt.value, ast.Constant) and isinstance(stmt.value.value, str):
                continue  # docstring
            else:
                raise self.fail(f"unsupported statement {type(stmt).__name__}", stmt)

    def define(self, node):
        args = node.args
        if args.vararg or args.kwarg or args.kwonlyargs or args.defaults or args.posonlyargs or node.decorator_list:
            raise self.fail(f"macro {node.name}() may only take plain positional parameters", node)
        body = [s for s in node.body if not (isinstance(s, ast.Expr) and isinstance(s.value, ast.Constant))]
        if len(body) != 1 or not isinstance(body[0], ast.Return) or body[0].value is None:
            raise self.fail(f"macro {node.name}() must consist of a single return statement", node)
        node.body = body
        self.env[node.name] = _Macro(node, self)

    def eval(self, node, scope=None):
        scope = scope or {}
        try:
            return self._eval(node, scope)
        except FormSyntaxError:
            raise
        except FormError as exc:
            raise self.fail(str(exc), node) from exc
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise self.fail(str(exc), node) from exc

    def _eval(self, node, scope):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (Number, str)) and not isinstance(node.value, bool):
                return node.value
            raise self.fail(f"unsupported literal {node.value!r}", node)
        if isinstance(node, ast.Name):
            if node.id in scope:
                return scope[node.id]
            if node.id in self.env:
                return self.env[node.id]
            raise self.fail(f"undeclared identifier {node.id!r}", node)
        if isinstance(node, ast.BinOp):
            op = _BINOPS.get(type(node.op))
            if op is None:
                raise self.fail(f"unsupported operator {type(node.op).__name__}", node)
            left, right = self._eval(node.left, scope), self._eval(node.right, scope)
            if op is operator.pow and not (isinstance(left, Number) and isinstance(right, Number)):
                raise self.fail("powers are only allowed between numbers", node)
            return op(left, right)
        if isinstance(node, ast.UnaryOp):
            value = self._eval(node.operand, scope)
            if isinstance(node.op, ast.USub):
                return -value
            if isinstance(node.op, ast.UAdd):
                return +value
            raise self.fail(f"unsupported operator {type(node.op).__name__}", node)
        if isinstance(node, ast.Call):
            fn = self._eval(node.func, scope)
            if node.keywords:
                raise self.fail("keyword arguments are not supported", node)
            if not callable(fn):
                raise self.fail(f"{ast.unparse(node.func)} is not callable", node)
            args = [self._eval(a, scope) for a in node.args]
            return fn(*args)
        if isinstance(node, ast.Subscript):
            value = self._eval(node.value, scope)
            key = node.slice
            if isinstance(key, ast.Tuple):
                key = tuple(self._eval(k, scope) for k in key.elts)
            else:
                key = self._eval(key, scope)
            if not isinstance(value, dsl.Expr):
                raise self.fail("only form expressions can be indexed", node)
            return value[key]
        if isinstance(node, ast.Tuple):
            return tuple(self._eval(e, scope) for e in node.elts)
        raise self.fail(f"unsupported syntax {type(node).__name__}", node)


def parse_form_file(text):
    """Parse form-file text and return the pair ``(a, L)``.

    Either entry may be ``None`` when the file does not define it, but at
    least one of them must be present.
    """
    try:
        tree = ast.parse(text)
    except SyntaxError as exc:
        raise FormSyntaxError(f"syntax error: {exc.msg}", exc.lineno, exc.offset) from None
    interp = _Interpreter()
    interp.run(tree)
    forms = []
    for name in ("a", "L"):
        value = interp.env.get(name)
        if value is not None and not isinstance(value, dsl.Form):
            raise FormError(f"{name} must be a form (did you forget '*dx'?)")
        forms.append(value)
    if forms == [None, None]:
        raise FormError("no form defined: expected 'a = ...' or 'L = ...'")
    return tuple(forms)


def load_form_file(path):
    with open(path, encoding="utf-8") as fh:
        return parse_form_file(fh.read())
