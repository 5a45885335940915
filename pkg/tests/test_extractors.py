"""Tests for the HTML, PDF and URI extractors."""

import random

import pytest

from greyharvest.extractors import (
    GenericMetaNames,
    discover_feed,
    extract_coins,
    extract_document,
    extract_dublin_core,
    extract_eprints,
    extract_generic_meta,
    extract_google_scholar,
    extract_html_title,
    extract_ogp,
    extract_pdf_info,
    extract_prism,
    extract_schema_org,
    extract_twitter_card,
    infer_date_from_uri,
    profile_name,
)
from greyharvest.fetcher import SourceDocument
from greyharvest.model import Field, PartialDate, SourceKind

from .support import OBSERVED, fixture_doc, make_pdf


def _doc(html: str, uri: str = "http://example.org/page") -> SourceDocument:
    return SourceDocument.from_bytes(
        uri, html.encode("utf-8"), headers=[("content-type", "text/html")], fetched_at=OBSERVED
    )


def _literals(fragment) -> list[str]:
    return [p.literal for p in fragment.authors]


def _only(fragments):
    assert len(fragments) == 1
    return fragments[0]


class TestHtmlTitle:
    def test_whitespace_collapsed(self):
        fragment = _only(extract_html_title(_doc("<title>\n  A   Title \n</title>")))
        assert fragment.title == "A Title"
        assert fragment.source == SourceKind.HTML_TITLE

    def test_first_title_only(self):
        fragment = _only(extract_html_title(_doc("<title>One</title><title>Two</title>")))
        assert fragment.title == "One"

    def test_missing_or_blank(self):
        assert extract_html_title(_doc("<p>no title</p>")) == []
        assert extract_html_title(_doc("<title>   </title>")) == []


class TestGoogleScholar:
    def test_citation_tags(self):
        doc = fixture_doc("scholar.html", "http://journal.example.org/articles/42")
        fragment = _only(extract_google_scholar(doc))
        assert fragment.title == "Ontology Reuse in Practice"
        assert _literals(fragment) == ["Okafor, Ada", "Jane Smith"]
        assert fragment.issued == PartialDate(2012, 3, 15)
        assert fragment.container == "Journal of Examples"
        assert fragment.observed_at == OBSERVED

    def test_bepress_semicolon_authors(self):
        doc = fixture_doc("bepress.html", "http://digitalcommons.example.edu/theses/17/")
        fragment = _only(extract_google_scholar(doc))
        assert _literals(fragment) == ["Ada Lovelace", "Charles Babbage"]
        assert fragment.issued == PartialDate(2010)
        assert fragment.container == "Example Digital Commons"

    def test_conference_title_as_container(self):
        doc = _doc('<meta name="citation_conference_title" content="Example Conference">')
        assert _only(extract_google_scholar(doc)).container == "Example Conference"

    def test_nothing_found(self):
        assert extract_google_scholar(_doc("<title>Plain</title>")) == []


class TestDublinCore:
    def test_mixed_prefixes_in_document_order(self):
        doc = fixture_doc("dublin_core.html", "http://repository.example.org/items/dc-77")
        fragment = _only(extract_dublin_core(doc))
        assert fragment.title == "Semantic Publishing Patterns"
        assert _literals(fragment) == ["Ada Okafor", "Lena Vogt"]
        assert fragment.issued == PartialDate(2011, 9, 1)
        assert fragment.container == "Example Repository"

    def test_unparseable_date_dropped(self):
        doc = _doc('<meta name="DC.title" content="T"><meta name="DC.date" content="soon">')
        fragment = _only(extract_dublin_core(doc))
        assert fragment.issued is None
        assert fragment.fields == {Field.TITLE}


class TestOgp:
    def test_article_properties(self):
        doc = fixture_doc("ogp.html", "http://news.example.com/story?id=9")
        fragment = _only(extract_ogp(doc))
        assert fragment.title == "Citation Story"
        assert fragment.container == "Example News"
        assert fragment.issued == PartialDate(2013, 1, 7)
        assert _literals(fragment) == ["Kim Writer"]
        assert fragment.canonical_uri == "http://news.example.com/2013/01/07/citation-story/"

    def test_relative_og_url_resolved(self):
        doc = _doc('<meta property="og:url" content="/canonical">', uri="http://example.org/a/b")
        assert _only(extract_ogp(doc)).canonical_uri == "http://example.org/canonical"

    def test_author_uri_becomes_author_page(self):
        doc = _doc(
            '<meta property="og:title" content="T">'
            '<meta property="article:author" content="https://social.example.com/kim">'
        )
        fragment = _only(extract_ogp(doc))
        assert fragment.authors == ()
        assert fragment.author_pages == ("https://social.example.com/kim",)

    def test_bad_og_url_ignored(self):
        doc = _doc(
            '<meta property="og:title" content="T"><meta property="og:url" content="ftp://x/">'
        )
        assert _only(extract_ogp(doc)).canonical_uri is None


class TestProfileName:
    def test_og_title(self):
        assert profile_name(_doc('<meta property="og:title" content="Kim Writer">')) == "Kim Writer"

    def test_profile_names(self):
        doc = _doc(
            '<meta property="profile:first_name" content="Kim">'
            '<meta property="profile:last_name" content="Writer">'
        )
        assert profile_name(doc) == "Kim Writer"

    def test_falls_back_to_title(self):
        assert profile_name(_doc("<title>Kim's page</title>")) == "Kim's page"


class TestCoins:
    def test_span_matching_location(self):
        doc = fixture_doc("coins.html", "http://blog.example.net/posts/coins-demo")
        fragment = _only(extract_coins(doc))
        assert fragment.title == "Lightweight Publishing"
        assert _literals(fragment) == ["Ada Okafor", "Priya Natarajan"]
        assert fragment.issued == PartialDate(2011, 6, 20)
        assert fragment.container == "Example Blog"
        assert fragment.canonical_uri == "http://blog.example.net/posts/coins-demo"

    def test_span_describing_elsewhere_is_blocked(self):
        doc = fixture_doc(
            "coins_researchblogging.html", "http://science.example.org/blog/review-of-paper"
        )
        assert extract_coins(doc) == []

    def test_aulast_aufirst(self):
        doc = _doc(
            '<span class="Z3988" title="ctx_ver=Z39.88-2004&amp;rft.btitle=Book'
            '&amp;rft.aulast=Okafor&amp;rft.aufirst=Ada"></span>'
        )
        fragment = _only(extract_coins(doc))
        assert fragment.title == "Book"
        assert _literals(fragment) == ["Okafor, Ada"]
        assert fragment.canonical_uri is None

    def test_empty_and_undecodable_spans(self):
        doc = _doc('<span class="Z3988"></span><span class="Z3988" title="no pairs here"></span>')
        assert extract_coins(doc) == []

    def test_class_match_is_case_insensitive(self):
        doc = _doc('<span class="z3988" title="ctx_ver=Z39.88-2004&amp;rft.atitle=T"></span>')
        assert _only(extract_coins(doc)).title == "T"


class TestPrism:
    def test_container_and_date_only(self):
        doc = fixture_doc("prism.html", "http://periodical.example.org/vol3/article5")
        fragment = _only(extract_prism(doc))
        assert fragment.container == "Journal of Things"
        assert fragment.issued == PartialDate(2011, 5)
        assert fragment.fields == {Field.CONTAINER, Field.ISSUED}


class TestEprints:
    def test_eprints_tags(self):
        doc = fixture_doc("eprints.html", "http://eprints.example.ac.uk/1234/")
        fragment = _only(extract_eprints(doc))
        assert fragment.title == "Preservation of Blogs"
        assert _literals(fragment) == ["Okafor, Ada", "Brandt, Tomas"]
        assert fragment.issued == PartialDate(2010)
        assert fragment.container == "Proceedings of Examples"


class TestTwitterCard:
    def test_handles_lose_at_sign(self):
        doc = fixture_doc("twitter.html", "http://www.bbc.example.co.uk/news/science-1")
        fragment = _only(extract_twitter_card(doc))
        assert fragment.title == "Comet Lands"
        assert fragment.container == "BBCNews"
        assert _literals(fragment) == ["sciencereporter"]

    def test_bare_at_sign(self):
        doc = _doc('<meta name="twitter:creator" content="@">')
        assert extract_twitter_card(doc) == []


class TestSchemaOrg:
    def test_article_scope_ignores_nested_items(self):
        doc = fixture_doc("schema_org.html", "http://magazine.example.org/features/ocean")
        fragment = _only(extract_schema_org(doc))
        assert fragment.title == "The Ocean Floor"
        assert fragment.issued == PartialDate(2012, 6, 1)
        assert fragment.authors == ()

    def test_non_article_types_skipped(self):
        doc = _doc(
            '<div itemscope itemtype="http://schema.org/Product">'
            '<span itemprop="name">Widget</span></div>'
        )
        assert extract_schema_org(doc) == []

    def test_name_when_no_headline(self):
        doc = _doc(
            '<div itemscope itemtype="https://schema.org/BlogPosting">'
            '<span itemprop="name">Post Name</span></div>'
        )
        assert _only(extract_schema_org(doc)).title == "Post Name"


class TestGenericMeta:
    def test_author_and_date(self):
        doc = fixture_doc("generic_meta.html", "http://personal.example.org/notes/on-reuse")
        fragment = _only(extract_generic_meta(doc))
        assert _literals(fragment) == ["Sam Author"]
        assert fragment.issued == PartialDate(2013, 1, 7)
        assert fragment.title is None

    def test_configured_names(self):
        doc = _doc('<meta name="creator" content="Ann Other"><meta name="pubdate" content="2010">')
        assert extract_generic_meta(doc) == []
        names = GenericMetaNames(authors=("creator",), dates=("pubdate",))
        fragment = _only(extract_generic_meta(doc, names))
        assert _literals(fragment) == ["Ann Other"]
        assert fragment.issued == PartialDate(2010)


class TestDiscoverFeed:
    def test_first_alternate_feed(self):
        doc = fixture_doc("blog_post.html", "http://blog.example.org/2012/02/notebook-science/")
        assert discover_feed(doc) == "http://blog.example.org/feed/"

    def test_atom_alternate(self):
        doc = _doc('<link rel="alternate" type="application/atom+xml" href="atom.xml">')
        assert discover_feed(doc) == "http://example.org/atom.xml"

    def test_other_links_ignored(self):
        doc = _doc(
            '<link rel="stylesheet" href="s.css">'
            '<link rel="alternate" hreflang="fr" href="/fr">'
        )
        assert discover_feed(doc) is None


class TestPdfInfo:
    def test_title_and_authors(self):
        body = make_pdf(title="A Paper", author="Ada Okafor and Tomas Brandt")
        doc = SourceDocument.from_bytes("http://example.org/a.pdf", body, fetched_at=OBSERVED)
        fragment = _only(extract_pdf_info(doc))
        assert fragment.title == "A Paper"
        assert _literals(fragment) == ["Ada Okafor", "Tomas Brandt"]
        assert fragment.source == SourceKind.PDF

    def test_semicolon_authors(self):
        body = make_pdf(author="Okafor, Ada; Brandt, Tomas")
        doc = SourceDocument.from_bytes("http://example.org/a.pdf", body, fetched_at=OBSERVED)
        assert _literals(_only(extract_pdf_info(doc))) == ["Okafor, Ada", "Brandt, Tomas"]

    def test_no_info(self):
        doc = SourceDocument.from_bytes("http://example.org/a.pdf", make_pdf(), fetched_at=OBSERVED)
        assert extract_pdf_info(doc) == []

    def test_garbage_yields_nothing(self):
        doc = SourceDocument.from_bytes("http://example.org/a.pdf", b"%PDF-1.4\n\x00garbage")
        assert extract_pdf_info(doc) == []


class TestUriDate:
    """Test the permalink date heuristic."""

    @pytest.mark.parametrize(
        "uri, expected",
        [
            ("http://blog.example.org/2012/02/notebook-science/", PartialDate(2012, 2)),
            ("http://blog.example.org/2012/2/14/post", PartialDate(2012, 2, 14)),
            ("http://blog.example.org/archive/2010/11", PartialDate(2010, 11)),
            ("http://blog.example.org/2012/02/30/", PartialDate(2012, 2)),
            ("http://blog.example.org/1985/05/x/2011/07/", PartialDate(2011, 7)),
        ],
    )
    def test_dated_paths(self, uri, expected):
        fragment = infer_date_from_uri(uri, OBSERVED)
        assert fragment.issued == expected
        assert fragment.source == SourceKind.URI_DATE
        assert fragment.fields == {Field.ISSUED}

    def test_query_is_not_examined(self):
        assert infer_date_from_uri("http://example.org/p?d=/2012/05/", OBSERVED) is None

    def test_future_years_rejected(self):
        assert infer_date_from_uri("http://example.org/2015/01/", OBSERVED) is None
        assert infer_date_from_uri("http://example.org/2014/01/", OBSERVED) is not None

    def test_generated_precision_and_recall(self):
        rng = random.Random(20130601)
        words = ["blog", "archives", "posts", "news", "notes", "entry"]

        def prefix() -> str:
            return "".join(f"/{rng.choice(words)}" for _ in range(rng.randint(0, 2)))

        def slug() -> str:
            return rng.choice(["", "/", f"/{rng.choice(words)}-{rng.choice(words)}/"])

        valid = []
        for _ in range(100):
            year, month = rng.randint(1990, 2013), rng.randint(1, 12)
            month_text = f"{month:02d}" if rng.random() < 0.5 else str(month)
            if rng.random() < 0.5:
                day = rng.randint(1, 28)
                path = f"{prefix()}/{year}/{month_text}/{day:02d}{slug()}"
                expected = PartialDate(year, month, day)
            else:
                path = f"{prefix()}/{year}/{month_text}{slug()}"
                expected = PartialDate(year, month)
            valid.append((f"http://site{rng.randint(1, 9)}.example.org{path}", expected))

        decoy_makers = [
            lambda y, m: f"/{y}/{rng.randint(13, 99)}/",
            lambda y, m: f"/{rng.randint(1000, 1989)}/{m:02d}/",
            lambda y, m: f"/post{y}/{m:02d}/",
            lambda y, m: f"/1{y}/{m:02d}/",
            lambda y, m: f"/{y}/{m:02d}x/",
            lambda y, m: f"/{y}-{m:02d}-01/",
            lambda y, m: f"/{y}/00/",
            lambda y, m: f"/{rng.randint(2015, 2099)}/{m:02d}/",
        ]
        decoys = []
        for index in range(100):
            year, month = rng.randint(1990, 2013), rng.randint(1, 12)
            path = decoy_makers[index % len(decoy_makers)](year, month)
            decoys.append(f"http://site.example.org{prefix()}{path}{rng.choice(words)}")

        hits = [infer_date_from_uri(uri, OBSERVED) for uri, _ in valid]
        assert [h.issued if h else None for h in hits] == [expected for _, expected in valid]
        assert [uri for uri in decoys if infer_date_from_uri(uri, OBSERVED)] == []


class TestExtractDocument:
    def test_html_runs_every_extractor(self):
        doc = fixture_doc("schema_org.html", "http://magazine.example.org/2012/06/ocean")
        sources = {f.source for f in extract_document(doc)}
        assert sources == {
            SourceKind.HTML_TITLE,
            SourceKind.OGP,
            SourceKind.SCHEMA_ORG,
            SourceKind.GENERIC_META,
            SourceKind.URI_DATE,
        }

    def test_pdf_routes_to_pdf_extractor(self):
        doc = SourceDocument.from_bytes(
            "http://example.org/2011/04/a.pdf", make_pdf(title="P"), fetched_at=OBSERVED
        )
        sources = [f.source for f in extract_document(doc)]
        assert sources == [SourceKind.PDF, SourceKind.URI_DATE]

    def test_feed_body_yields_nothing_here(self):
        doc = SourceDocument.from_bytes(
            "http://example.org/2012/01/feed",
            b'<?xml version="1.0"?><rss version="2.0"><channel><title>T</title></channel></rss>',
        )
        assert extract_document(doc) == []

    def test_failing_extractor_is_contained(self, monkeypatch):
        from greyharvest import extractors

        def broken(doc):
            raise RuntimeError("boom")

        monkeypatch.setitem(extractors.HTML_EXTRACTORS, "html_title", broken)
        doc = fixture_doc("scholar.html", "http://journal.example.org/articles/42")
        sources = {f.source for f in extract_document(doc)}
        assert SourceKind.GOOGLE_SCHOLAR in sources
        assert SourceKind.HTML_TITLE not in sources
