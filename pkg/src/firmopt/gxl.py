"""Reading and writing GXL documents.

The in-memory form keeps everything the passes do not understand (unknown
XML attributes, unknown child elements) so a parse/serialize cycle is
lossless for the parts of GXL that FIRM dumps use.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union
from xml.sax.saxutils import escape, quoteattr

from .errors import BadAttrPayload, MalformedXml, MissingTypeRef

XLINK_NS = "http://www.w3.org/1999/xlink"
_HREF = "{%s}href" % XLINK_NS

ET.register_namespace("xlink", XLINK_NS)

_DOCTYPE_RE = re.compile(rb"<!DOCTYPE\b(?:[^>\[]|\[[^\]]*\])*>\s*", re.IGNORECASE)

Scalar = Union[int, str, bool]

SCALAR_KINDS = ("int", "string", "bool")


@dataclass(frozen=True)
class AttrValue:
    """One scalar attribute payload: ``kind`` is ``int``, ``string`` or ``bool``."""

    kind: str
    value: Scalar

    def __post_init__(self):
        if self.kind not in SCALAR_KINDS:
            raise BadAttrPayload("unsupported scalar kind %r" % self.kind)

    @classmethod
    def of(cls, value: Scalar) -> "AttrValue":
        # bool first: it is a subclass of int
        if isinstance(value, bool):
            return cls("bool", value)
        if isinstance(value, int):
            return cls("int", value)
        if isinstance(value, str):
            return cls("string", value)
        raise BadAttrPayload("cannot store %r in a GXL attribute" % (value,))

    def text(self) -> str:
        if self.kind == "bool":
            return "true" if self.value else "false"
        return str(self.value)


@dataclass
class GxlAttr:
    name: str
    value: Optional[AttrValue]
    # only populated by a lenient parse of a broken attribute (see validate R1)
    extra_values: list = field(default_factory=list)
    extra_attrs: dict = field(default_factory=dict)
    extras: list = field(default_factory=list)

    def payload_count(self) -> int:
        return (self.value is not None) + len(self.extra_values)


class _Attributed:
    """Mixin giving nodes and edges name-based attribute access."""

    attrs: list

    def get_attr(self, name: str) -> Optional[AttrValue]:
        for a in self.attrs:
            if a.name == name:
                return a.value
        return None

    def get(self, name: str, default=None):
        v = self.get_attr(name)
        return default if v is None else v.value

    def set_attr(self, name: str, value: Union[AttrValue, Scalar]) -> None:
        if not isinstance(value, AttrValue):
            value = AttrValue.of(value)
        for a in self.attrs:
            if a.name == name:
                a.value = value
                a.extra_values = []
                return
        self.attrs.append(GxlAttr(name, value))

    def del_attr(self, name: str) -> bool:
        before = len(self.attrs)
        self.attrs[:] = [a for a in self.attrs if a.name != name]
        return len(self.attrs) != before


@dataclass(eq=True)
class GxlNode(_Attributed):
    id: str
    type_ref: str
    attrs: list = field(default_factory=list)
    extra_attrs: dict = field(default_factory=dict)
    extras: list = field(default_factory=list)

    @property
    def type_name(self) -> str:
        return self.type_ref[1:] if self.type_ref.startswith("#") else self.type_ref


@dataclass(eq=True)
class GxlEdge(_Attributed):
    id: Optional[str]
    from_id: str
    to_id: str
    type_ref: str
    attrs: list = field(default_factory=list)
    extra_attrs: dict = field(default_factory=dict)
    extras: list = field(default_factory=list)

    @property
    def position(self) -> Optional[int]:
        v = self.get_attr("position")
        if v is None or v.kind != "int":
            return None
        return v.value


@dataclass
class GxlGraph:
    id: str
    type_ref: Optional[str]
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    extra_attrs: dict = field(default_factory=dict)
    extras: list = field(default_factory=list)

    @property
    def is_default(self) -> bool:
        return self.type_ref == "#DefaultGraph"


@dataclass
class GxlDocument:
    graphs: list = field(default_factory=list)
    source_name: str = field(default="", compare=False)
    extra_attrs: dict = field(default_factory=dict)
    extras: list = field(default_factory=list)

    def default_graphs(self) -> list:
        return [g for g in self.graphs if g.is_default]

    def iter_attrs(self) -> Iterator[GxlAttr]:
        for g in self.graphs:
            for n in g.nodes:
                yield from n.attrs
            for e in g.edges:
                yield from e.attrs


# -- parsing ---------------------------------------------------------------

def strip_doctype(data: bytes) -> bytes:
    return _DOCTYPE_RE.sub(b"", data, count=1)


def _opaque(elem: ET.Element) -> str:
    elem.tail = None
    return ET.tostring(elem, encoding="unicode")


def _split_attrib(elem: ET.Element, known: tuple) -> dict:
    return {k: v for k, v in elem.attrib.items() if k not in known}


def _type_ref(elem: ET.Element, what: str) -> Optional[str]:
    t = elem.find("type")
    if t is None:
        return None
    href = t.get(_HREF) or t.get("href")
    if not href:
        raise MissingTypeRef("%s has a type element without xlink:href" % what)
    return href


def _parse_scalar(elem: ET.Element, owner: str) -> AttrValue:
    text = elem.text or ""
    if elem.tag == "int":
        try:
            return AttrValue("int", int(text.strip()))
        except ValueError:
            raise BadAttrPayload("attribute %r: %r is not an int" % (owner, text)) from None
    if elem.tag == "bool":
        t = text.strip().lower()
        if t not in ("true", "false"):
            raise BadAttrPayload("attribute %r: %r is not a bool" % (owner, text))
        return AttrValue("bool", t == "true")
    if elem.tag == "string":
        return AttrValue("string", text)
    raise BadAttrPayload("attribute %r: unsupported scalar <%s>" % (owner, elem.tag))


def _parse_attr(elem: ET.Element, strict: bool) -> GxlAttr:
    name = elem.get("name")
    if not name:
        raise BadAttrPayload("attr element without a name")
    values = [_parse_scalar(child, name) for child in elem]
    if strict and len(values) != 1:
        raise BadAttrPayload("attribute %r has %d values, expected exactly one" % (name, len(values)))
    return GxlAttr(
        name=name,
        value=values[0] if values else None,
        extra_values=values[1:],
        extra_attrs=_split_attrib(elem, ("name",)),
    )


def _parse_children(elem, strict):
    attrs, extras = [], []
    seen_type = False
    for child in elem:
        if child.tag == "type" and not seen_type:
            seen_type = True
        elif child.tag == "attr":
            attrs.append(_parse_attr(child, strict))
        else:
            extras.append(_opaque(child))
    return attrs, extras


def _parse_node(elem, strict) -> GxlNode:
    nid = elem.get("id")
    if nid is None:
        raise MalformedXml("node element without an id")
    ref = _type_ref(elem, "node %r" % nid)
    if ref is None:
        raise MissingTypeRef("node %r has no type element" % nid)
    attrs, extras = _parse_children(elem, strict)
    return GxlNode(nid, ref, attrs, _split_attrib(elem, ("id",)), extras)


def _parse_edge(elem, strict) -> GxlEdge:
    src, dst = elem.get("from"), elem.get("to")
    if not src or not dst:
        raise MalformedXml("edge %r lacks a from or to endpoint" % elem.get("id"))
    ref = _type_ref(elem, "edge %s->%s" % (src, dst))
    if ref is None:
        raise MissingTypeRef("edge %s->%s has no type element" % (src, dst))
    attrs, extras = _parse_children(elem, strict)
    return GxlEdge(elem.get("id"), src, dst, ref, attrs,
                   _split_attrib(elem, ("id", "from", "to")), extras)


def _parse_graph(elem, strict) -> GxlGraph:
    g = GxlGraph(id=elem.get("id", ""), type_ref=_type_ref(elem, "graph"),
                 extra_attrs=_split_attrib(elem, ("id",)))
    seen_type = False
    for child in elem:
        if child.tag == "type" and not seen_type:
            seen_type = True
        elif child.tag == "node":
            g.nodes.append(_parse_node(child, strict))
        elif child.tag == "edge":
            g.edges.append(_parse_edge(child, strict))
        else:
            g.extras.append(_opaque(child))
    return g


def parse_gxl(data: Union[bytes, str], source_name: str = "", strict: bool = True) -> GxlDocument:
    """Parse GXL text into a :class:`GxlDocument`.

    A document-type declaration, if present, is dropped before parsing.
    With ``strict=False`` attributes carrying zero or several scalars are
    kept (for the validator to report) instead of raising BadAttrPayload.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        root = ET.fromstring(strip_doctype(data))
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from None
    if root.tag != "gxl":
        raise MalformedXml("root element is <%s>, expected <gxl>" % root.tag)
    doc = GxlDocument(source_name=source_name, extra_attrs=dict(root.attrib))
    for child in root:
        if child.tag == "graph":
            doc.graphs.append(_parse_graph(child, strict))
        else:
            doc.extras.append(_opaque(child))
    return doc


def load_gxl(path, strict: bool = True) -> GxlDocument:
    from pathlib import Path

    p = Path(path)
    return parse_gxl(p.read_bytes(), source_name=p.stem, strict=strict)


# -- serialization ---------------------------------------------------------

_PREFIXES = {XLINK_NS: "xlink", "http://www.w3.org/XML/1998/namespace": "xml"}


def _qname(key: str) -> str:
    if key.startswith("{"):
        uri, local = key[1:].split("}", 1)
        prefix = _PREFIXES.get(uri)
        # foreign namespaces are not declared on output; keep the local name
        return "%s:%s" % (prefix, local) if prefix else local
    return key


def _open_tag(tag: str, attrs: dict) -> str:
    parts = [tag] + ["%s=%s" % (_qname(k), quoteattr(v)) for k, v in attrs.items()]
    return "<" + " ".join(parts)


def _scalar_xml(v: AttrValue) -> str:
    return "<%s>%s</%s>" % (v.kind, escape(v.text()), v.kind)


def _write_attr(out: list, a: GxlAttr, ind: str) -> None:
    values = ([a.value] if a.value is not None else []) + list(a.extra_values)
    head = _open_tag("attr", {"name": a.name, **a.extra_attrs})
    inner = "".join(_scalar_xml(v) for v in values) + "".join(a.extras)
    out.append("%s%s>%s</attr>" % (ind, head, inner))


def _write_type(out: list, ref: str, ind: str) -> None:
    out.append("%s<type xlink:href=%s/>" % (ind, quoteattr(ref)))


def _write_element(out, tag, attrs, type_ref, attr_list, extras, ind):
    out.append(ind + _open_tag(tag, attrs) + ">")
    inner = ind + "  "
    _write_type(out, type_ref, inner)
    for a in attr_list:
        _write_attr(out, a, inner)
    for x in extras:
        out.append(inner + x)
    out.append("%s</%s>" % (ind, tag))


def serialize_gxl(doc: GxlDocument) -> bytes:
    """Render ``doc`` as deterministic, indented GXL (UTF-8, no DOCTYPE)."""
    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    out.append(_open_tag("gxl", {"xmlns:xlink": XLINK_NS, **doc.extra_attrs}) + ">")
    for g in doc.graphs:
        out.append("  " + _open_tag("graph", {"id": g.id, **g.extra_attrs}) + ">")
        if g.type_ref is not None:
            _write_type(out, g.type_ref, "    ")
        for n in g.nodes:
            _write_element(out, "node", {"id": n.id, **n.extra_attrs},
                           n.type_ref, n.attrs, n.extras, "    ")
        for e in g.edges:
            head = {} if e.id is None else {"id": e.id}
            head.update({"from": e.from_id, "to": e.to_id})
            head.update(e.extra_attrs)
            _write_element(out, "edge", head, e.type_ref, e.attrs, e.extras, "    ")
        for x in g.extras:
            out.append("    " + x)
        out.append("  </graph>")
    for x in doc.extras:
        out.append("  " + x)
    out.append("</gxl>")
    return ("\n".join(out) + "\n").encode("utf-8")


def save_gxl(doc: GxlDocument, path) -> None:
    from pathlib import Path

    Path(path).write_bytes(serialize_gxl(doc))
