"""Regenerates fixture.jsonl: six small hand-built commits.

The first one reconstructs the motivating PeepholeFoldConstants.java change
(seven deleted lines, five added, root cause on old line 427). Only the
changed lines' numbers are known, so the surrounding file is padding.

    python3 tests/data/make_fixture.py > tests/data/fixture.jsonl
"""

import json
import sys


def change(path, old_lines, new_lines, deleted, added, roots):
    old_src = "".join(l + "\n" for l in old_lines)
    new_src = "".join(l + "\n" for l in new_lines)
    return {
        "path": path,
        "old_source": old_src,
        "new_source": new_src,
        "deleted": [{"line_no": n, "text": old_lines[n - 1], "is_root_cause": n in roots} for n in deleted],
        "added": [{"line_no": n, "text": new_lines[n - 1]} for n in added],
    }


def pad(lines, upto):
    """Pads with unremarkable helper methods until len(lines) == upto."""
    i = 0
    while len(lines) < upto - 4:
        lines += ["", f"  private int helper{i}(int v) {{", f"    return v + {i};", "  }"]
        i += 1
    while len(lines) < upto:
        lines.append("")
    return lines


def motivation():
    head = pad(["package com.google.javascript.jscomp;", "", "class PeepholeFoldConstants {"], 399)
    region = [
        "  private Node tryFoldShift(Node n, Node left, Node right) {",   # 400
        "    if (left.getType() == Token.NUMBER &&",
        "        right.getType() == Token.NUMBER) {",
        "      double result;",
        "      double lval = left.getDouble();",
        "      double rval = right.getDouble();",                          # 405
        "",
        "      int m = n.getType();",                                      # 407 D
        "      // check for overflow",
        "      if (!(lval >= Integer.MIN_VALUE && lval <= Integer.MAX_VALUE)) {",
        "        error(BITWISE_OPERAND_OUT_OF_RANGE, left);",              # 410
        "        return n;",
        "      }",
        "      if (!(rval >= 0 && rval < 32)) {",
        "        error(SHIFT_AMOUNT_OUT_OF_BOUNDS, right);",
        "        return n;",                                               # 415
        "      }",
        "      int lvalInt = (int) lval;",                                 # 417 D
        "      int rvalInt = (int) rval;",
        "      if (m != Token.LSH) {",
        "        lvalInt = lvalInt >> (m & 1);",                           # 420 D
        "        rvalInt = rvalInt % (m + 32);",                           # 421 D
        "      }",
        "      switch (m) {",
        "        case Token.LSH:",
        "          result = lvalInt << rvalInt;",                          # 425
        "        case Token.URSH:",
        "          result = lvalInt >>> rvalInt;",                         # 427 D root
        "          Node folded = Node.newNumber(result);",                 # 428 D
        "          n.getParent().replaceChild(n, folded);",                # 429 D
        "          break;",                                                # 430
        "        default:",
        "          throw new Error(\"Unexpected op\");",
        "      }",
        "      return n;",
        "    }",                                                           # 435
        "    return n;",
        "  }",
        "}",
    ]
    old = head + region
    assert old[406] == "      int m = n.getType();" and old[426].strip() == "result = lvalInt >>> rvalInt;"

    new = list(old)
    new[406] = "      int m = n.getType() & 0xff;"
    new[419] = "        lvalInt = lvalInt >> (m & 3);"
    del new[420]           # old 421
    del new[416]           # old 417
    # old 427..429 -> three new lines (indices shift by -2)
    i = 426 - 2
    new[i:i + 3] = [
        "          long lvalLong = lvalInt & 0xffffffffL;",
        "          result = lvalLong >>> rvalInt;",
        "          n.getParent().replaceChild(n, Node.newNumber(result));",
    ]
    added = [407, 419, 425, 426, 427]
    assert new[418] == "        lvalInt = lvalInt >> (m & 3);"
    f = change("src/com/google/javascript/jscomp/PeepholeFoldConstants.java", old, new,
               [407, 417, 420, 421, 427, 428, 429], added, {427})
    return {"commit_id": "closure-motivation", "project": "closure", "files": [f]}


def straight_line():
    old = [
        "class Counter {",
        "  int tick(int a) {",
        "    int m = f(a);",
        "    int x = m + 1;",
        "    int y = x * 2;",
        "    use(m);",
        "    return y;",
        "  }",
        "}",
    ]
    new = [
        "class Counter {",
        "  int tick(int a) {",
        "    int m = f(a);",
        "    int x = m + 2;",
        "    return x;",
        "  }",
        "}",
    ]
    f = change("src/Counter.java", old, new, [4, 5, 6, 7], [4, 5], {4})
    return {"commit_id": "fixture-straight", "project": "fixture", "files": [f]}


def calls_and_fields():
    old = [
        "public class Cache {",
        "  private int size;",
        "  private int hits;",
        "",
        "  void reset() {",
        "    size = 0;",
        "    this.hits = 0;",
        "  }",
        "",
        "  int lookup(int key) {",
        "    // probe the table",
        "    int slot = key % 7;",
        "    if (slot > size) {",
        "      reset();",
        "    }",
        "    hits++;",
        "    return slot;",
        "  }",
        "}",
    ]
    new = [
        "public class Cache {",
        "  private int size;",
        "  private int hits;",
        "",
        "  void reset() {",
        "    size = 0;",
        "    this.hits = 0;",
        "  }",
        "",
        "  int lookup(int key) {",
        "    // probe the table",
        "    int slot = key % 11;",
        "    if (slot >= size) {",
        "      reset();",
        "    }",
        "    return slot;",
        "  }",
        "}",
    ]
    f = change("src/Cache.java", old, new, [12, 13, 16], [12, 13], {13})
    return {"commit_id": "fixture-calls", "project": "fixture", "files": [f]}


def single_deletion():
    old = ["class One {", "  void run() {", "    step();", "    debug();", "  }", "}"]
    new = ["class One {", "  void run() {", "    step();", "  }", "}"]
    f = change("src/One.java", old, new, [4], [], {4})
    return {"commit_id": "fixture-single", "project": "closure", "files": [f]}


def multi_file():
    a_old = [
        "class Parser {",
        "  int parse(String s) {",
        "    int n = s.length();",
        "    int k = 0;",
        "    while (k < n) {",
        "      k = k + 1;",
        "    }",
        "    return k;",
        "  }",
        "}",
    ]
    a_new = [
        "class Parser {",
        "  int parse(String s) {",
        "    int n = s.length();",
        "    int k = 0;",
        "    while (k <= n) {",
        "      k = k + 2;",
        "    }",
        "    return k;",
        "  }",
        "}",
    ]
    b_old = ["class Lexer {", "  int next(int c) {", "    int t = c * 3;", "", "    return t;", "  }", "}"]
    b_new = ["class Lexer {", "  int next(int c) {", "    int t = c * 4;", "", "    return t;", "  }", "}"]
    fa = change("src/Parser.java", a_old, a_new, [5, 6], [5, 6], {5})
    fb = change("src/Lexer.java", b_old, b_new, [3], [3], set())
    return {"commit_id": "fixture-multifile", "project": "fixture", "files": [fa, fb]}


def branches():
    old = [
        "class Gate {",
        "  int open(int v, int w) {",
        "    int r = 0;",
        "    if (v > w) {",
        "      r = v - w;",
        "    } else {",
        "      r = w - v;",
        "    }",
        "    for (int i = 0; i < r; i++) {",
        "      log(i);",
        "    }",
        "    return r;",
        "  }",
        "}",
    ]
    new = [
        "class Gate {",
        "  int open(int v, int w) {",
        "    int r = 0;",
        "    if (v >= w) {",
        "      r = v - w;",
        "    } else {",
        "      r = w - v + 1;",
        "    }",
        "    return r;",
        "  }",
        "}",
    ]
    f = change("src/Gate.java", old, new, [4, 7, 9, 10, 11], [4, 7], {4, 7})
    return {"commit_id": "closure-branches", "project": "closure", "files": [f]}


def main():
    for c in (motivation(), straight_line(), calls_and_fields(), single_deletion(), multi_file(), branches()):
        sys.stdout.write(json.dumps(c, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
