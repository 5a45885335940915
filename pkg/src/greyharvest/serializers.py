"""Render a BibRecord as Citeproc JSON, BibTeX, RIS, Dublin Core Turtle or wiki markup."""

import hashlib
import json
import re
from dataclasses import dataclass
from typing import Callable
from urllib.parse import quote

from rdflib import Graph, Literal, URIRef
from rdflib.namespace import DC

from .model import BibRecord, PartialDate, Person, host_of

MONTHS = ("jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec")

_BIBTEX_SPECIALS = re.compile(r"[\\{}%&]")
_BIBTEX_ESCAPES = {
    "\\": r"\textbackslash{}",
    "{": r"\textbraceleft{}",
    "}": r"\textbraceright{}",
    "%": r"\%",
    "&": r"\&",
}


def _citeproc_name(person: Person) -> dict:
    if person.family:
        name = {"family": person.family}
        if person.given:
            name["given"] = person.given
        return name
    return {"literal": person.literal}


def to_citeproc(record: BibRecord) -> str:
    """One CSL-JSON object; absent fields are omitted."""
    data: dict = {"id": record.uri, "type": "webpage"}
    if record.title:
        data["title"] = record.title
    if record.authors:
        data["author"] = [_citeproc_name(p) for p in record.authors]
    if record.container:
        data["container-title"] = record.container
    if record.issued:
        data["issued"] = {"date-parts": [record.issued.parts]}
    data["URL"] = record.link
    return json.dumps(data, ensure_ascii=False, indent=2)


def bibtex_escape(text: str) -> str:
    return _BIBTEX_SPECIALS.sub(lambda m: _BIBTEX_ESCAPES[m.group(0)], text)


def bibtex_key(record: BibRecord) -> str:
    host = re.sub(r"[^A-Za-z0-9.-]", "-", host_of(record.uri))
    return f"{host}_{hashlib.sha256(record.uri.encode('utf-8')).hexdigest()[:8]}"


def to_bibtex(record: BibRecord) -> str:
    fields: list[tuple[str, str]] = []
    if record.title:
        fields.append(("title", bibtex_escape(record.title)))
    if record.authors:
        fields.append(("author", " and ".join(bibtex_escape(p.literal) for p in record.authors)))
    if record.issued:
        fields.append(("year", str(record.issued.year)))
        if record.issued.month:
            fields.append(("month", MONTHS[record.issued.month - 1]))
    fields.append(("howpublished", f"\\url{{{bibtex_escape(record.link)}}}"))
    if record.archives:
        snapshots = ", ".join(bibtex_escape(s.snapshot_uri) for s in record.archives)
        fields.append(("note", f"Archived at: {snapshots}"))

    lines = [f"@misc{{{bibtex_key(record)},"]
    lines += [f"  {name} = {{{value}}}," for name, value in fields]
    lines[-1] = lines[-1].rstrip(",")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _ris_date(issued: PartialDate) -> str:
    month = f"{issued.month:02d}" if issued.month else ""
    day = f"{issued.day:02d}" if issued.day else ""
    return f"{issued.year:04d}/{month}/{day}/"


def _ris_name(person: Person) -> str:
    if person.family and person.given:
        return f"{person.family}, {person.given}"
    return person.family or person.literal


def to_ris(record: BibRecord) -> str:
    """RIS with CRLF line ends and a single TY/ER frame."""
    lines = ["TY  - ELEC"]
    if record.title:
        lines.append(f"TI  - {record.title}")
    lines += [f"AU  - {_ris_name(p)}" for p in record.authors]
    if record.issued:
        lines.append(f"PY  - {_ris_date(record.issued)}")
    if record.container:
        lines.append(f"T2  - {record.container}")
    lines.append(f"UR  - {record.link}")
    lines.append("ER  - ")
    return "\r\n".join(lines) + "\r\n"


# Reserved and unreserved characters plus "%" pass through; everything else is encoded.
_IRI_SAFE = "!#$%&'()*+,/:;=?@[]~"


def to_iri(uri: str) -> str:
    """Percent-encode characters Turtle will not accept inside <...>."""
    return quote(uri, safe=_IRI_SAFE)


def to_dc_rdf(record: BibRecord) -> str:
    """Dublin Core description of the URI, as Turtle."""
    graph = Graph()
    graph.bind("dc", DC)
    subject = URIRef(to_iri(record.uri))
    if record.title:
        graph.add((subject, DC.title, Literal(record.title)))
    for person in record.authors:
        graph.add((subject, DC.creator, Literal(person.literal)))
    if record.issued:
        graph.add((subject, DC.date, Literal(record.issued.isoformat())))
    if record.container:
        graph.add((subject, DC.publisher, Literal(record.container)))
    if record.canonical_uri and record.canonical_uri != record.uri:
        graph.add((subject, DC.identifier, URIRef(to_iri(record.canonical_uri))))
    return graph.serialize(format="turtle")


def wiki_escape(value: str) -> str:
    """Braces become entities so a value can never close the template."""
    value = value.replace("{", "&#123;").replace("}", "&#125;")
    return value.replace("|", "{{!}}")


def to_wiki_cite(record: BibRecord) -> str:
    """{{cite web}} template; access-date is the retrieval date."""
    parts = [("url", record.link)]
    if record.title:
        parts.append(("title", record.title))
    for index, person in enumerate(record.authors, start=1):
        parts.append(("author" if index == 1 else f"author{index}", person.literal))
    if record.issued:
        parts.append(("date", record.issued.isoformat()))
    if record.container:
        parts.append(("website", record.container))
    if record.archives:
        first = min(record.archives, key=lambda s: s.snapshot_time)
        parts.append(("archive-url", first.snapshot_uri))
        parts.append(("archive-date", first.snapshot_time.date().isoformat()))
    parts.append(("access-date", record.retrieved_at.date().isoformat()))
    return "{{cite web " + " ".join(f"|{k}={wiki_escape(v)}" for k, v in parts) + "}}"


@dataclass(frozen=True)
class OutputFormat:
    name: str
    render: Callable[[BibRecord], str]
    media_type: str


FORMATS: dict[str, OutputFormat] = {
    f.name: f
    for f in (
        OutputFormat("json", to_citeproc, "application/json"),
        OutputFormat("bibtex", to_bibtex, "text/plain"),
        OutputFormat("ris", to_ris, "application/x-research-info-systems"),
        OutputFormat("rdf", to_dc_rdf, "text/turtle"),
        OutputFormat("wiki", to_wiki_cite, "text/plain"),
    )
}


def render(record: BibRecord, format_name: str) -> str:
    output = FORMATS.get(format_name)
    if output is None:
        raise ValueError(f"unknown format {format_name!r}; choose from {', '.join(FORMATS)}")
    return output.render(record)
