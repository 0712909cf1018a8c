"""Seeded synthetic Java/Python method-comment pairs for tests and demos.

Each sample instantiates one of a handful of small tasks (sum, max, count,
...) over a domain noun (price, speed, ...). Identifier names carry the noun
and role, comments mention the task and the noun, so a retrieval model keyed
on subtokens is sensitive to renaming in the same way real models are.
"""
from __future__ import annotations

import re
from typing import Dict, List, Optional

import numpy as np

from .corpus import CodeSample
from .lang import JAVA, PYTHON, validate
from .lang.lexer import check_lang

NOUNS = ("price", "speed", "score", "weight", "height", "salary", "distance", "age", "volume", "rating")

ROLE_POOLS: Dict[str, List[str]] = {
    "arr": ["{n}s", "{n}List", "all{N}s", "{n}Values", "input{N}s"],
    "acc": ["total", "sum", "acc", "running{N}"],
    "val": ["{n}", "value", "item", "cur{N}"],
    "best": ["best", "top{N}", "maxSoFar", "largest"],
    "cnt": ["count", "hits", "num{N}s"],
    "lim": ["limit", "threshold", "min{N}"],
    "target": ["target", "wanted{N}", "key"],
    "factor": ["factor", "scale", "ratio"],
    "low": ["low", "lo", "floor{N}"],
    "high": ["high", "hi", "ceil{N}"],
    "sep": ["sep", "delimiter", "glue"],
    "sb": ["sb", "builder", "buf"],
    "result": ["result", "res", "out{N}s", "copy"],
    "i": ["i", "j", "k"],
}

TASKS = {
    "sum": {
        "verbs": ["sum", "total", "add"],
        "comments": ["returns the sum of all {n} values", "adds up every {n} in the array"],
        JAVA: """public int {fn}(int[] {arr}) {
    int {acc} = 0;
    for (int {i} = 0; {i} < {arr}.length; {i}++) {
        {acc} += {arr}[{i}];
    }
    return {acc};
}""",
        PYTHON: """def {fn}({arr}):
    {acc} = 0
    for {val} in {arr}:
        {acc} += {val}
    return {acc}""",
    },
    "max": {
        "verbs": ["max", "largest", "highest"],
        "comments": ["finds the largest {n} in the array", "returns the maximum {n}"],
        JAVA: """public int {fn}(int[] {arr}) {
    int {best} = {arr}[0];
    for (int {val} : {arr}) {
        {best} = Math.max({best}, {val});
    }
    return {best};
}""",
        PYTHON: """def {fn}({arr}):
    {best} = {arr}[0]
    for {val} in {arr}:
        if {val} > {best}:
            {best} = {val}
    return {best}""",
    },
    "average": {
        "verbs": ["average", "mean", "avg"],
        "comments": ["computes the average {n} of the values", "returns the mean {n}"],
        JAVA: """public double {fn}(double[] {arr}) {
    double {acc} = 0;
    for (double {val} : {arr}) {
        {acc} += {val};
    }
    return {acc} / {arr}.length;
}""",
        PYTHON: """def {fn}({arr}):
    {acc} = 0.0
    for {val} in {arr}:
        {acc} += {val}
    return {acc} / len({arr})""",
    },
    "count": {
        "verbs": ["countAbove", "countOver", "numAbove"],
        "comments": ["counts how many {n} values exceed the limit",
                     "returns the number of {n} entries above a threshold"],
        JAVA: """public int {fn}(int[] {arr}, int {lim}) {
    int {cnt} = 0;
    for (int {i} = 0; {i} < {arr}.length; {i}++) {
        if ({arr}[{i}] > {lim}) {
            {cnt}++;
        }
    }
    return {cnt};
}""",
        PYTHON: """def {fn}({arr}, {lim}):
    {cnt} = 0
    for {val} in {arr}:
        if {val} > {lim}:
            {cnt} += 1
    return {cnt}""",
    },
    "contains": {
        "verbs": ["contains", "has", "includes"],
        "comments": ["checks whether the {n} list contains the target", "returns true if the given {n} is present"],
        JAVA: """public boolean {fn}(List<Integer> {arr}, int {target}) {
    for (Integer {val} : {arr}) {
        if ({val}.equals({target})) {
            return true;
        }
    }
    return false;
}""",
        PYTHON: """def {fn}({arr}, {target}):
    for {val} in {arr}:
        if {val} == {target}:
            return True
    return False""",
    },
    "scale": {
        "verbs": ["scale", "multiply", "resize"],
        "comments": ["scales each {n} by the given factor", "multiplies every {n} by a factor"],
        JAVA: """public void {fn}(double[] {arr}, double {factor}) {
    for (int {i} = 0; {i} < {arr}.length; {i}++) {
        {arr}[{i}] = {arr}[{i}] * {factor};
    }
}""",
        PYTHON: """def {fn}({arr}, {factor}):
    {result} = []
    for {val} in {arr}:
        {result}.append({val} * {factor})
    return {result}""",
    },
    "clamp": {
        "verbs": ["clamp", "limit", "bound"],
        "comments": ["clamps the {n} between the lower and upper bound", "limits a {n} to the given range"],
        JAVA: """public int {fn}(int {val}, int {low}, int {high}) {
    if ({val} < {low}) {
        return {low};
    }
    return Math.min({val}, {high});
}""",
        PYTHON: """def {fn}({val}, {low}, {high}):
    if {val} < {low}:
        return {low}
    return min({val}, {high})""",
    },
    "join": {
        "verbs": ["join", "concat", "format"],
        "comments": ["joins the {n} names with a separator", "builds a string of {n} labels"],
        JAVA: """public String {fn}(List<String> {arr}, String {sep}) {
    StringBuilder {sb} = new StringBuilder();
    for (String {val} : {arr}) {
        if ({sb}.length() > 0) {
            {sb}.append({sep});
        }
        {sb}.append({val});
    }
    return {sb}.toString();
}""",
        PYTHON: """def {fn}({arr}, {sep}):
    {result} = ''
    for {val} in {arr}:
        if {result}:
            {result} += {sep}
        {result} += str({val})
    return {result}""",
    },
    "reverse": {
        "verbs": ["reverse", "flip", "invert"],
        "comments": ["returns the {n} values in reverse order", "reverses a copy of the {n} array"],
        JAVA: """public int[] {fn}(int[] {arr}) {
    int[] {result} = new int[{arr}.length];
    for (int {i} = 0; {i} < {arr}.length; {i}++) {
        {result}[{arr}.length - 1 - {i}] = {arr}[{i}];
    }
    return {result};
}""",
        PYTHON: """def {fn}({arr}):
    {result} = []
    for {i} in range(len({arr}) - 1, -1, -1):
        {result}.append({arr}[{i}])
    return {result}""",
    },
}

_SLOT = re.compile(r"\{(\w+)\}")


def _snake(name: str) -> str:
    return re.sub(r"(?<=[a-z0-9])([A-Z])", r"_\1", name).lower()


def _fill(pattern: str, noun: str) -> str:
    return pattern.replace("{n}", noun).replace("{N}", noun.capitalize())


def synth_sample(rng: np.random.Generator, lang: str, sample_id: str, task: Optional[str] = None,
                 noun: Optional[str] = None) -> CodeSample:
    """One random sample; ``task`` and ``noun`` are drawn when not given."""
    check_lang(lang)
    names = sorted(TASKS)
    task = task or names[int(rng.integers(len(names)))]
    noun = noun or NOUNS[int(rng.integers(len(NOUNS)))]
    spec = TASKS[task]
    template = spec[lang]
    slots = list(dict.fromkeys(_SLOT.findall(template)))
    chosen: Dict[str, str] = {}
    for slot in slots:
        if slot == "fn":
            verb = spec["verbs"][int(rng.integers(len(spec["verbs"])))]
            plural = "s" if rng.random() < 0.5 else ""
            name = verb + noun.capitalize() + plural
        else:
            pool = ROLE_POOLS[slot]
            options = [_fill(p, noun) for p in pool]
            options = [o for o in options if (_snake(o) if lang == PYTHON else o) not in
                       {(_snake(v) if lang == PYTHON else v) for v in chosen.values()}]
            name = options[int(rng.integers(len(options)))]
        chosen[slot] = name
    if lang == PYTHON:
        chosen = {k: _snake(v) for k, v in chosen.items()}
    code = _SLOT.sub(lambda m: chosen[m.group(1)], template)
    comment = _fill(spec["comments"][int(rng.integers(len(spec["comments"])))], noun)
    return CodeSample(sample_id, code, comment, lang)


def synth_corpus(n: int, lang: str, seed: int = 0, prefix: str = "s") -> List[CodeSample]:
    """``n`` seeded samples with ids ``<prefix>000000``...; every sample passes ``validate``."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        sample = synth_sample(rng, lang, f"{prefix}{k:06d}")
        if not validate(sample.code, lang):
            raise AssertionError(f"synthetic template produced invalid code:\n{sample.code}")
        out.append(sample)
    return out
