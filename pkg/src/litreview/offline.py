"""Deterministic stand-in completions for the scripted backend.

Each prompt kind is recognized by its fixed instruction text and answered in
the shape its parser expects, so the whole pipeline runs without a network.
"""

from __future__ import annotations

import re

from .llm import ChatRequest

_GEN_ENTRY = re.compile(r"^\d+\. (?P<title>.+) by (?P<author>.+?) et al\. (?P<year>\S+)$")
_CTS_LINE = re.compile(r"^\[[^\]]*\] (?P<sentence>.+)$")
_WORD = re.compile(r"[^\W_]+")


def _field(prompt: str, label: str) -> str:
    match = re.search(rf"^{label}: (.*)$", prompt, re.MULTILINE)
    return match.group(1).strip() if match else ""


def _first_sentence(text: str) -> str:
    text = " ".join(text.split())
    match = re.match(r"(.+?[.!?])(?:\s|$)", text)
    return (match.group(1) if match else text).rstrip(".!?")


def _faceted(prompt: str) -> str:
    title = _field(prompt, "Title") or "the paper"
    abstract = _first_sentence(_field(prompt, "Abstract")) or title
    words = sorted({w.casefold() for w in _WORD.findall(title) if len(w) > 4})[:3] or ["paper"]
    return "\n".join(
        [
            f"Objective: To study {title}.",
            f"Method: {abstract}.",
            f"Findings: The approach in {title} is effective.",
            f"Contribution: A study of {title}.",
            f"Keywords: {'; '.join(words)}.",
        ]
    )


def _relation(prompt: str) -> str:
    match = re.search(r"relationship between (.+?) and (.+) by (.+?)\. TLDR:", prompt)
    if not match:
        return "The citing paper builds on the cited paper."
    a_name, b_title, b_name = match.groups()
    return f"{a_name} builds on {b_title} by {b_name}."


def _usage(prompt: str) -> str:
    match = re.search(r"How other papers cite (.+?):\n", prompt)
    name = match.group(1) if match else "The paper"
    fragments = re.findall(r"^\d+\. (.+)$", prompt, re.MULTILINE)
    parenthetical = sum(1 for f in fragments if re.search(r"\(\D*\d{4}\)|\[\d", f))
    intent = "as a reference" if parenthetical * 2 > len(fragments) else "its core method, a dominant usage"
    return f"{name} is known for the work it introduced and it is cited for {intent}."


def _main_idea(prompt: str) -> str:
    gold = prompt.split("Ignore citations.\n", 1)[-1]
    sentence = _first_sentence(re.sub(r"\s*(\([^)]*\d{4}[^)]*\)|\[[\d,\s–-]+\])", "", gold))
    return f"{sentence}." if sentence else "Prior work on the topic."


def _generation(prompt: str) -> str:
    listing = prompt.split("List of cited papers:\n", 1)[1]
    idea = ""
    if "Main idea of our related work section:\n" in prompt:
        idea = prompt.split("Main idea of our related work section:\n", 1)[1].split("\n\n", 1)[0]
    sentences = []
    for block in listing.split("\n\n"):
        lines = block.splitlines()
        if not lines:
            continue
        entry = _GEN_ENTRY.match(lines[0])
        if entry:
            sentences.append(
                f"{entry['author']} et al. ({entry['year']}) studied {entry['title'].rstrip('.')}."
            )
            continue
        if lines[0].startswith("Potentially useful sentences") and len(lines) > 1 and sentences:
            cts = _CTS_LINE.match(lines[1])
            quote = (cts["sentence"] if cts else lines[1]).rstrip(".")
            if quote[1:2].islower():
                quote = quote[0].lower() + quote[1:]
            sentences[-1] += f" They report that {quote}."
    if idea:
        sentences.insert(0, _first_sentence(idea) + ".")
    half = (len(sentences) + 1) // 2
    paragraphs = [" ".join(sentences[:half]), " ".join(sentences[half:])]
    return "\n\n".join(p for p in paragraphs if p)


def structured_responder(request: ChatRequest) -> str:
    prompt = request.last_user_message
    if "List of cited papers:\n" in prompt:
        return _generation(prompt)
    if "What are the objective, method, findings, contributions and keywords" in prompt:
        return _faceted(prompt)
    if "Very briefly explain the relationship" in prompt:
        return _relation(prompt)
    if "is known for XXX and it is cited for YYY" in prompt:
        return _usage(prompt)
    if "Ignore citations." in prompt:
        return _main_idea(prompt)
    return prompt[:40]
