/**
 * The shared corpus text format: UTF-8 plain text, one sentence per line,
 * single-space token separation, LF line endings.  `<s>`, `</s>` and
 * `<unk>` are reserved for the language-model layer and tokens starting
 * with `+` mark subword continuations; neither may appear in a corpus
 * file this component reads or writes.
 */

import { readFileSync, writeFileSync } from "node:fs";

const RESERVED = new Set(["<s>", "</s>", "<unk>"]);

export type Sentence = string[];

export function validateToken(token: string, line: number): void {
  if (!token) throw new Error(`line ${line}: empty token`);
  if (RESERVED.has(token)) {
    throw new Error(`line ${line}: reserved symbol ${token} in corpus`);
  }
  if (token.startsWith("+")) {
    throw new Error(`line ${line}: boundary-tagged token ${token} in word corpus`);
  }
  if (/\s/.test(token)) throw new Error(`line ${line}: whitespace inside token`);
}

export function readCorpus(path: string): Sentence[] {
  const sentences: Sentence[] = [];
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((lineText, i) => {
    const trimmed = lineText.trim();
    if (!trimmed) return;
    const tokens = trimmed.split(/\s+/);
    for (const tok of tokens) validateToken(tok, i + 1);
    sentences.push(tokens);
  });
  return sentences;
}

export function writeCorpus(sentences: Sentence[], path: string): void {
  const body = sentences.map((s) => s.join(" ")).join("\n");
  writeFileSync(path, body + (sentences.length ? "\n" : ""), "utf-8");
}
