"""Reader and writer for the scenario-file TOML subset.

Supported: comments, ``[table]`` and ``[table.sub]`` headers, bare keys,
basic strings with the usual escapes, integers, floats, booleans, and
(possibly nested, multi-line) arrays.  Not supported: inline tables, arrays
of tables, dotted keys, literal/multiline strings, datetimes.  This covers
the documented scenario schema; files using unsupported constructs are
rejected with a position.
"""

from __future__ import annotations

from .errors import SchemaError

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\", "f": "\f", "b": "\b"}


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def error(self, message: str) -> SchemaError:
        line = self.text.count("\n", 0, self.i) + 1
        return SchemaError(f"{message} (line {line})")

    def at_end(self) -> bool:
        return self.i >= len(self.text)

    def peek(self) -> str:
        return self.text[self.i] if self.i < len(self.text) else ""

    def skip_inline_ws(self):
        while self.peek() in (" ", "\t"):
            self.i += 1

    def skip_ws_comments(self):
        while not self.at_end():
            c = self.peek()
            if c in (" ", "\t", "\n", "\r"):
                self.i += 1
            elif c == "#":
                while not self.at_end() and self.peek() != "\n":
                    self.i += 1
            else:
                return

    def skip_to_eol(self):
        self.skip_inline_ws()
        if self.peek() == "#":
            while not self.at_end() and self.peek() != "\n":
                self.i += 1
        if self.at_end():
            return
        if self.peek() not in ("\n", "\r"):
            raise self.error(f"unexpected trailing content {self.peek()!r}")

    def read_key(self) -> str:
        start = self.i
        while self.peek().isalnum() or self.peek() in ("_", "-"):
            self.i += 1
        if self.i == start:
            raise self.error(f"expected a key, found {self.peek()!r}")
        return self.text[start : self.i]

    def read_string(self) -> str:
        assert self.peek() == '"'
        self.i += 1
        out = []
        while True:
            if self.at_end():
                raise self.error("unterminated string")
            c = self.text[self.i]
            self.i += 1
            if c == '"':
                return "".join(out)
            if c == "\n":
                raise self.error("newline in single-line string")
            if c == "\\":
                esc = self.text[self.i : self.i + 1]
                self.i += 1
                if esc == "u":
                    hexs = self.text[self.i : self.i + 4]
                    self.i += 4
                    out.append(chr(int(hexs, 16)))
                elif esc in _ESCAPES:
                    out.append(_ESCAPES[esc])
                else:
                    raise self.error(f"unsupported escape \\{esc}")
            else:
                out.append(c)

    def read_number_or_bool(self):
        start = self.i
        while self.peek() and (self.peek().isalnum() or self.peek() in "+-._"):
            self.i += 1
        token = self.text[start : self.i]
        if token == "true":
            return True
        if token == "false":
            return False
        cleaned = token.replace("_", "")
        try:
            if any(c in cleaned for c in ".eE") and not cleaned.lstrip("+-").isdigit():
                return float(cleaned)
            return int(cleaned)
        except ValueError:
            raise self.error(f"cannot parse value {token!r}") from None

    def read_array(self) -> list:
        assert self.peek() == "["
        self.i += 1
        out = []
        while True:
            self.skip_ws_comments()
            if self.at_end():
                raise self.error("unterminated array")
            if self.peek() == "]":
                self.i += 1
                return out
            out.append(self.read_value())
            self.skip_ws_comments()
            if self.peek() == ",":
                self.i += 1
            elif self.peek() != "]":
                raise self.error("expected ',' or ']' in array")

    def read_value(self):
        c = self.peek()
        if c == '"':
            return self.read_string()
        if c == "[":
            return self.read_array()
        if c == "{":
            raise self.error("inline tables are not supported")
        return self.read_number_or_bool()


def loads(text: str) -> dict:
    """Parse the TOML subset into nested dicts."""
    reader = _Reader(text)
    root: dict = {}
    current = root
    while True:
        reader.skip_ws_comments()
        if reader.at_end():
            return root
        if reader.peek() == "[":
            reader.i += 1
            if reader.peek() == "[":
                raise reader.error("arrays of tables are not supported")
            path = []
            while True:
                reader.skip_inline_ws()
                path.append(reader.read_key())
                reader.skip_inline_ws()
                if reader.peek() == ".":
                    reader.i += 1
                    continue
                if reader.peek() == "]":
                    reader.i += 1
                    break
                raise reader.error("malformed table header")
            reader.skip_to_eol()
            current = root
            for part in path:
                nxt = current.setdefault(part, {})
                if not isinstance(nxt, dict):
                    raise reader.error(f"key {part!r} already used for a value")
                current = nxt
        else:
            key = reader.read_key()
            reader.skip_inline_ws()
            if reader.peek() != "=":
                raise reader.error(f"expected '=' after key {key!r}")
            reader.i += 1
            reader.skip_inline_ws()
            if key in current:
                raise reader.error(f"duplicate key {key!r}")
            current[key] = reader.read_value()
            reader.skip_to_eol()


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        out = ['"']
        for c in v:
            if c == '"':
                out.append('\\"')
            elif c == "\\":
                out.append("\\\\")
            elif c == "\n":
                out.append("\\n")
            elif c == "\t":
                out.append("\\t")
            elif ord(c) < 32:
                out.append(f"\\u{ord(c):04x}")
            else:
                out.append(c)
        out.append('"')
        return "".join(out)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    raise SchemaError(f"cannot serialize value of type {type(v).__name__}")


def dumps(data: dict) -> str:
    """Serialize nested dicts in insertion order; tables after scalars."""

    def emit(table: dict, path: tuple) -> list[str]:
        lines = []
        scalars = {k: v for k, v in table.items() if not isinstance(v, dict)}
        subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
        if path and (scalars or not subtables):
            lines.append(f"[{'.'.join(path)}]")
        for k, v in scalars.items():
            lines.append(f"{k} = {_fmt_value(v)}")
        if scalars or (path and not subtables):
            lines.append("")
        for k, v in subtables.items():
            lines.extend(emit(v, path + (k,)))
        return lines

    return "\n".join(emit(data, ())).rstrip("\n") + "\n"
