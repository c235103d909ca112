/**
 * Word-to-token bridging: words are split by the character-level BPE and
 * non-initial pieces carry a `+` prefix inside the model vocabulary, so a
 * sampled token stream maps back to plain words (the `+` convention never
 * reaches an output file).  `</s>` terminates sentences; characters outside
 * the tokenizer alphabet map to `<unk>`, which generation never emits.
 */

import type { BpeModel } from "./bpe.ts";
import { encodeWord } from "./bpe.ts";
import type { Sentence } from "./corpus.ts";

export const EOS = "</s>";
export const UNK = "<unk>";

export class Tokenizer {
  readonly bpe: BpeModel;
  readonly tokens: string[];
  readonly ids: Map<string, number>;
  readonly eosId: number;
  readonly unkId: number;
  private cache = new Map<string, number[]>();

  constructor(bpe: BpeModel) {
    this.bpe = bpe;
    const units = new Set<string>(bpe.alphabet);
    for (const [l, r] of bpe.merges) units.add(l + r);
    const sorted = [...units].sort();
    this.tokens = [EOS, UNK, ...sorted, ...sorted.map((u) => "+" + u)];
    this.ids = new Map(this.tokens.map((t, i) => [t, i]));
    this.eosId = 0;
    this.unkId = 1;
  }

  get vocabSize(): number {
    return this.tokens.length;
  }

  encodeWordIds(word: string): number[] {
    let cached = this.cache.get(word);
    if (!cached) {
      const pieces = encodeWord(this.bpe, word);
      cached = pieces.map((piece, i) => {
        const key = i === 0 ? piece : "+" + piece;
        return this.ids.get(key) ?? this.unkId;
      });
      this.cache.set(word, cached);
    }
    return cached;
  }

  /** Sentence to ids, terminated by `</s>`. */
  encodeSentence(sent: Sentence): number[] {
    const out: number[] = [];
    for (const w of sent) out.push(...this.encodeWordIds(w));
    out.push(this.eosId);
    return out;
  }

  /** Flat id stream over a corpus (each sentence `</s>`-terminated). */
  encodeCorpus(sentences: Sentence[]): Int32Array {
    const parts: number[] = [];
    for (const sent of sentences) parts.push(...this.encodeSentence(sent));
    return Int32Array.from(parts);
  }

  /** Ids back to words; `+`-pieces extend the currently open word. */
  decodeToWords(ids: number[]): string[] {
    const words: string[] = [];
    for (const id of ids) {
      const tok = this.tokens[id];
      if (tok === EOS || tok === UNK) continue;
      if (tok.startsWith("+") && words.length > 0) {
        words[words.length - 1] += tok.slice(1);
      } else {
        words.push(tok.startsWith("+") ? tok.slice(1) : tok);
      }
    }
    return words;
  }
}
