#!/usr/bin/env python3
"""Regenerates the committed fixtures under fixtures/.

    python3 tools/make_fixtures.py

Output is deterministic (fixed seed). The wikitext fixture's manifest lists, per
revision, the URLs that each hand-written block contributes; blocks are
assembled here so the expected sets never pass through the C++ extractor.
"""

import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures"

RELIABLE = {
    "nature.com": ["https://www.nature.com/articles/{}", "HTTPS://WWW.Nature.com/articles/{}#sec1"],
    "bbc.co.uk": ["https://news.bbc.co.uk/2/hi/science/{}.stm", "http://www.bbc.co.uk:80/news/{}"],
    "reuters.com": ["https://www.reuters.com/article/{}"],
    "nasa.gov": ["https://climate.nasa.gov/news/{}/", "https://www.nasa.gov/feature/{}"],
    "noaa.gov": ["https://www.noaa.gov/news/{}"],
    "apnews.com": ["https://apnews.com/article/{}"],
    "theguardian.com": ["https://www.theguardian.com/environment/{}"],
}
UNRELIABLE = {
    "dailymail.co.uk": ["https://www.dailymail.co.uk/sciencetech/article-{}.html"],
    "breitbart.com": ["https://www.breitbart.com/politics/{}/"],
    "infowars.com": ["https://www.infowars.com/posts/{}"],
    "rt.com": ["https://www.rt.com/news/{}/"],
    "naturalnews.com": ["https://www.naturalnews.com/{}.html"],
    "wattsupwiththat.com": ["https://wattsupwiththat.com/{}/"],
}
OTHER = {
    "forbes.com": ["https://www.forbes.com/sites/{}/"],
    "youtube.com": ["https://www.youtube.com/watch?v={}"],
    "ipcc.ch": ["https://www.ipcc.ch/report/{}/"],
    "example.org": ["http://example.org/{}", "ftp://example.org/{}"],
}

REGISTERED = ["Alice", "Bob", "Carol", "Dmitri", "Eun-ji", "Farid", "Greta"]
ANON = ["203.0.113.7", "198.51.100.23", "192.0.2.55", "2001:db8::17"]


def ts(t):
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def make_mini():
    rng = random.Random(20240115)
    lengths = [9, 15, 18, 22, 26, 30]
    titles = ["Greenhouse gas", "Sea level rise", "Climate change denial",
              "Paris Agreement", "Arctic sea ice decline", "Carbon tax"]
    lines = []
    rev_id = 5000
    retrieved = datetime(2024, 1, 15, tzinfo=timezone.utc)
    for art, (n, title) in enumerate(zip(lengths, titles)):
        page_id = 101 + art
        if art == 0:
            users = ["Alice", "Alice", "Alice", "Bob", "Bob", "203.0.113.7", "Alice", "Alice", "203.0.113.7"]
        else:
            users = []
            for _ in range(n):
                if users and rng.random() < 0.3:
                    users.append(users[-1])
                elif rng.random() < 0.35:
                    users.append(rng.choice(ANON))
                else:
                    users.append(rng.choice(REGISTERED))
        t = datetime(2012 + art, 1 + art, 3, 8, 0, 0, tzinfo=timezone.utc)
        state = []  # list of url strings
        parent = None
        revs = []
        for i, user in enumerate(users):
            registered = user in REGISTERED
            t += timedelta(seconds=rng.randint(3600, 90 * 86400))
            # editorial behaviour: anonymous users add questionable sources,
            # registered users remove them and add well-established ones
            r = rng.random()
            if registered and rng.random() < 0.12:
                # occasional good-faith citation of a questionable outlet
                dom = rng.choice(sorted(UNRELIABLE))
                state.append(rng.choice(UNRELIABLE[dom]).format(rng.randint(1, 40)))
            elif registered:
                bad = [u for u in state if any(d in u for d in UNRELIABLE)]
                if bad and r < 0.45:
                    state.remove(rng.choice(bad))
                elif r < 0.85:
                    dom = rng.choice(sorted(RELIABLE))
                    state.append(rng.choice(RELIABLE[dom]).format(rng.randint(1, 40)))
                elif r < 0.93:
                    dom = rng.choice(sorted(OTHER))
                    state.append(rng.choice(OTHER[dom]).format(rng.randint(1, 9)))
                elif state:
                    state.remove(rng.choice(state))
            else:
                good = [u for u in state if any(d in u.lower() for d in RELIABLE)]
                if r < 0.6:
                    dom = rng.choice(sorted(UNRELIABLE))
                    state.append(rng.choice(UNRELIABLE[dom]).format(rng.randint(1, 40)))
                elif r < 0.75 and good:
                    state.remove(rng.choice(good))
                elif r < 0.9:
                    dom = rng.choice(sorted(OTHER))
                    state.append(rng.choice(OTHER[dom]).format(rng.randint(1, 9)))
                else:
                    dom = rng.choice(sorted(RELIABLE))
                    state.append(rng.choice(RELIABLE[dom]).format(rng.randint(1, 40)))
            rev = {
                "lang": "en", "topic": "climate", "page_id": page_id, "title": title,
                "rev_id": rev_id, "parent_id": parent, "timestamp": ts(t),
                "user": user, "registered": registered, "urls": list(state),
            }
            revs.append(rev)
            parent = rev_id
            rev_id += rng.randint(1, 30)
        if art != 5:
            lines.append(json.dumps({"meta": {"lang": "en", "topic": "climate", "page_id": page_id,
                                              "title": title, "retrieved_at": ts(retrieved)}},
                                    ensure_ascii=False))
        if art == 2:
            # stored out of order; the loader sorts by timestamp
            revs[3], revs[4] = revs[4], revs[3]
        lines.extend(json.dumps(r, ensure_ascii=False) for r in revs)
    (OUT / "mini_climate_en.jsonl").write_text("\n".join(lines) + "\n")


def make_labels():
    rows = [
        ("nature.com", "generally reliable"),
        ("bbc.co.uk", "generally reliable"),
        ("reuters.com", "generally reliable"),
        ("nasa.gov", "generally reliable"),
        ("apnews.com", "generally reliable"),
        ("theguardian.com", "generally reliable"),
        ("noaa.gov", "generally reliable"),
        ("dailymail.co.uk", "deprecated"),
        ("breitbart.com", "deprecated"),
        ("infowars.com", "blacklisted"),
        ("rt.com", "deprecated"),
        ("naturalnews.com", "blacklisted"),
        ("wattsupwiththat.com", "generally unreliable"),
        ("www.forbes.com", "no consensus"),
    ]
    text = "# snapshot: 2023-03-30\ndomain,category\n" + "".join(f"{d},{c}\n" for d, c in rows)
    (OUT / "mini_labels.csv").write_text(text)
    mbfc = [
        ("nature.com", "very high"), ("reuters.com", "high"), ("bbc.co.uk", "high"),
        ("dailymail.co.uk", "low"), ("breitbart.com", "low"), ("infowars.com", "very low"),
        ("forbes.com", "mixed"), ("theguardian.com", "medium"),
    ]
    text = "# snapshot: 2024-02-01\ndomain,category\n" + "".join(f"{d},{c}\n" for d, c in mbfc)
    (OUT / "mini_mbfc.csv").write_text(text)


# Hand-written wikitext blocks and the raw URLs each one yields.
BLOCKS = {
    "nature": ("<ref>{{cite web|url=https://www.nature.com/articles/s41558-019-0001|title=Warming|website=Nature}}</ref>",
               ["https://www.nature.com/articles/s41558-019-0001"]),
    "doi": ("<ref>{{cite journal |last=Doe |doi=10.1038/nclimate1234 |title=Feedbacks}}</ref>",
            ["https://doi.org/10.1038/nclimate1234"]),
    "noaa": ("See the [https://www.noaa.gov/climate NOAA climate portal].", ["https://www.noaa.gov/climate"]),
    "isbn": ("<ref>{{cite book|title=Climate Book|isbn=978-0-12-345678-9}}</ref>", []),
    "comment": ("<!-- old source: http://hidden.example.com/x -->", []),
    "bbc": ("<ref>Retrieved from http://www.bbc.co.uk/news/science-123.</ref>",
            ["http://www.bbc.co.uk/news/science-123"]),
    "dailymail": ("<ref>{{cite news|url=https://www.dailymail.co.uk/sci/a.html|archive-url=https://web.archive.org/web/2020/https://www.dailymail.co.uk/sci/a.html|title=Ice}}</ref>",
                  ["https://www.dailymail.co.uk/sci/a.html"]),
    "nowiki": ("<nowiki>http://nowiki.example.org/</nowiki>", []),
    "breitbart": ("<ref name=\"bb\">{{Cite web |url= https://www.breitbart.com/x/ |title=Hoax}}</ref>",
                  ["https://www.breitbart.com/x/"]),
    "doitpl": ("{{doi|10.1016/j.gloenvcha.2020.102}}", ["https://doi.org/10.1016/j.gloenvcha.2020.102"]),
    "infobox": ("{{Infobox organization|website=https://www.ipcc.ch/}}", []),
    "file": ("[[File:Chart.png|thumb|Data: https://data.giss.nasa.gov/gistemp/]]",
             ["https://data.giss.nasa.gov/gistemp/"]),
    "paren": ("{{cite web|url=https://en.wikipedia.org/wiki/Foo_(bar)|title=W}}",
              ["https://en.wikipedia.org/wiki/Foo_(bar)"]),
    "ipcc": ("(see http://www.ipcc.ch/report/ar6/)", ["http://www.ipcc.ch/report/ar6/"]),
    "issn": ("{{cite journal|issn=1234-5678|title=Journal}}", []),
    "chapter": ("{{cite book|chapter-url=https://press.uchicago.edu/ch1.html|title=C}}",
                ["https://press.uchicago.edu/ch1.html"]),
    "reuters": ("<ref>{{citation|url=https://www.reuters.com/article/climate-idUS123|title=R}}</ref>",
                ["https://www.reuters.com/article/climate-idUS123"]),
    "protorel": ("[//www.nasa.gov/feature/x NASA feature]", ["https://www.nasa.gov/feature/x"]),
}

SCRIPT = [
    ("Alice", []),
    ("Alice", ["nature"]),
    ("203.0.113.7", ["nature", "dailymail"]),
    ("Bob", ["nature"]),
    ("Bob", ["nature", "doi", "isbn"]),
    ("198.51.100.23", ["nature", "doi", "isbn", "breitbart", "comment"]),
    ("Carol", ["nature", "doi", "isbn", "comment"]),
    ("Carol", ["nature", "doi", "isbn", "comment", "noaa"]),
    ("Dmitri", ["nature", "doi", "noaa", "bbc"]),
    ("203.0.113.7", ["nature", "doi", "noaa", "bbc", "nowiki", "breitbart"]),
    ("Alice", ["nature", "doi", "noaa", "bbc", "nowiki"]),
    ("Alice", ["nature", "doi", "noaa", "bbc", "nowiki", "doitpl"]),
    ("Eun-ji", ["nature", "doi", "noaa", "bbc", "doitpl", "infobox"]),
    ("Eun-ji", ["nature", "doi", "noaa", "bbc", "doitpl", "infobox", "file"]),
    ("192.0.2.55", ["doi", "noaa", "bbc", "doitpl", "infobox", "file"]),
    ("Bob", ["nature", "doi", "noaa", "bbc", "doitpl", "infobox", "file"]),
    ("Bob", ["nature", "doi", "noaa", "bbc", "doitpl", "infobox", "file", "paren"]),
    ("Farid", ["nature", "doi", "noaa", "bbc", "doitpl", "infobox", "file", "paren", "ipcc"]),
    ("Farid", ["nature", "doi", "noaa", "bbc", "doitpl", "file", "paren", "ipcc", "issn"]),
    ("203.0.113.7", ["nature", "doi", "noaa", "bbc", "doitpl", "file", "paren", "ipcc", "issn", "dailymail"]),
    ("Greta", ["nature", "doi", "noaa", "bbc", "doitpl", "file", "paren", "ipcc", "issn"]),
    ("Greta", ["nature", "doi", "noaa", "bbc", "doitpl", "file", "paren", "ipcc", "chapter"]),
    ("Alice", ["nature", "doi", "noaa", "bbc", "doitpl", "file", "ipcc", "chapter", "reuters"]),
    ("Carol", ["nature", "doi", "noaa", "bbc", "doitpl", "file", "ipcc", "chapter", "reuters", "protorel"]),
    ("198.51.100.23", ["nature", "doi", "noaa", "doitpl", "file", "ipcc", "chapter", "reuters", "protorel"]),
    ("Dmitri", ["nature", "doi", "noaa", "bbc", "doitpl", "file", "ipcc", "chapter", "reuters", "protorel"]),
    ("Dmitri", ["nature", "doi", "noaa", "bbc", "doitpl", "file", "ipcc", "chapter", "reuters", "protorel", "comment"]),
    ("Bob", ["nature", "doi", "noaa", "bbc", "doitpl", "ipcc", "chapter", "reuters", "protorel"]),
    ("Eun-ji", ["nature", "doi", "noaa", "bbc", "doitpl", "ipcc", "chapter", "reuters", "protorel", "paren"]),
    ("Alice", ["nature", "doi", "noaa", "bbc", "doitpl", "ipcc", "chapter", "reuters", "protorel", "paren"]),
]


def make_wikitext():
    assert len(SCRIPT) == 30
    t = datetime(2016, 5, 1, 12, 0, 0, tzinfo=timezone.utc)
    lines, manifest = [], []
    parent = None
    for i, (user, blocks) in enumerate(SCRIPT):
        t += timedelta(hours=7 * i + 3)
        rev_id = 9000 + i
        body = "'''Global warming''' is the long-term rise in temperature.\n"
        body += "\n".join(f"Paragraph {k}. {BLOCKS[b][0]}" for k, b in enumerate(blocks))
        body += "\n== References ==\n{{reflist}}\n"
        expected = sorted({u for b in blocks for u in BLOCKS[b][1]})
        lines.append(json.dumps({
            "lang": "en", "topic": "climate", "page_id": 777, "title": "Global warming",
            "rev_id": rev_id, "parent_id": parent, "timestamp": ts(t), "user": user,
            "registered": user in REGISTERED, "wikitext": body}, ensure_ascii=False))
        manifest.append({"rev_id": rev_id, "urls": expected})
        parent = rev_id
    (OUT / "wikitext_30.jsonl").write_text("\n".join(lines) + "\n")
    (OUT / "wikitext_30.manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


def main():
    OUT.mkdir(exist_ok=True)
    make_mini()
    make_labels()
    make_wikitext()


if __name__ == "__main__":
    main()
