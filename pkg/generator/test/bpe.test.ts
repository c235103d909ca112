import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { encodeWord, loadMerges, mergePair, saveMerges, trainBpe } from "../src/bpe.ts";

describe("bpe training", () => {
  it("merges the most frequent pair first, ties lexicographic", () => {
    const sentences = [["aaab"], ["aaab"], ["aab"], ["aab"]];
    const model = trainBpe(sentences, 50);
    expect(model.merges[0]).toEqual(["a", "a"]);
    expect(model.merges[1]).toEqual(["a", "b"]);
  });

  it("stops when no pair occurs twice", () => {
    const model = trainBpe([["abc"]], 50);
    expect(model.merges).toEqual([]);
    expect([...model.alphabet].sort()).toEqual(["a", "b", "c"]);
  });

  it("respects the inventory bound", () => {
    const sentences = [["alma", "fa", "alma"], ["almafa", "fa"]];
    const model = trainBpe(sentences, 7);
    expect(model.alphabet.size + model.merges.length).toBeLessThanOrEqual(7);
  });

  it("rejects an inventory below the alphabet size", () => {
    expect(() => trainBpe([["abcd"]], 3)).toThrow(/inventory too small/);
  });
});

describe("bpe encoding", () => {
  it("applies merges in rank order, leftmost first", () => {
    const model = { alphabet: new Set(["a", "b"]), merges: [["a", "a"], ["aa", "b"]] as [string, string][] };
    expect(encodeWord(model, "aaab")).toEqual(["aa", "a", "b"]);
    expect(encodeWord(model, "aab")).toEqual(["aab"]);
  });

  it("falls back to characters outside the alphabet", () => {
    const model = { alphabet: new Set(["a"]), merges: [] as [string, string][] };
    expect(encodeWord(model, "kép")).toEqual(["k", "é", "p"]);
  });

  it("is lossless", () => {
    const model = trainBpe([["almafa", "almainak", "fainak"]], 12);
    for (const word of ["almafa", "fainak", "almainak", "zzz", "péld"]) {
      expect(encodeWord(model, word).join("")).toBe(word);
    }
  });

  it("single-pass merge replaces non-overlapping occurrences", () => {
    expect(mergePair(["a", "a", "a", "b"], "a", "a")).toEqual(["aa", "a", "b"]);
    expect(mergePair(["a", "a", "a", "a"], "a", "a")).toEqual(["aa", "aa"]);
  });
});

describe("merge file format", () => {
  it("round-trips through the shared format", () => {
    const dir = mkdtempSync(join(tmpdir(), "bpe-"));
    const model = trainBpe([["almafa", "alma", "fa"], ["alma", "almafa"]], 10);
    const path = join(dir, "model.bpe");
    saveMerges(model, path);
    const loaded = loadMerges(path);
    expect(loaded.merges).toEqual(model.merges);
    expect([...loaded.alphabet].sort()).toEqual([...model.alphabet].sort());
  });

  it("reads files produced by the companion toolkit", () => {
    const dir = mkdtempSync(join(tmpdir(), "bpe-"));
    const path = join(dir, "external.bpe");
    writeFileSync(
      path,
      "#bpe v1 alphabet=3 merges=2\n#chars a b c\na b\nab c\n",
      "utf-8",
    );
    const model = loadMerges(path);
    expect(model.merges).toEqual([["a", "b"], ["ab", "c"]]);
    expect(encodeWord(model, "abc")).toEqual(["abc"]);
  });

  it("rejects header/content mismatches", () => {
    const dir = mkdtempSync(join(tmpdir(), "bpe-"));
    const path = join(dir, "bad.bpe");
    writeFileSync(path, "#bpe v1 alphabet=2 merges=3\n#chars a b\na b\n", "utf-8");
    expect(() => loadMerges(path)).toThrow(/declares/);
  });
});
