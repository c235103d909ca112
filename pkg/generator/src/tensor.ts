/**
 * Minimal reverse-mode autodiff on dense 2D matrices (Float64Array).
 * Matrix granularity keeps the toy transformer fast enough in pure
 * TypeScript; a finite-difference gradient check in the test suite pins
 * every backward rule.
 */

export class Tensor {
  readonly rows: number;
  readonly cols: number;
  data: Float64Array;
  grad: Float64Array | null = null;
  requiresGrad = false;
  parents: Tensor[] = [];
  backwardFn: (() => void) | null = null;

  constructor(rows: number, cols: number, data?: Float64Array) {
    this.rows = rows;
    this.cols = cols;
    this.data = data ?? new Float64Array(rows * cols);
  }

  static param(rows: number, cols: number, init: (i: number) => number): Tensor {
    const t = new Tensor(rows, cols);
    for (let i = 0; i < t.data.length; i++) t.data[i] = init(i);
    t.requiresGrad = true;
    t.grad = new Float64Array(rows * cols);
    return t;
  }

  ensureGrad(): Float64Array {
    if (!this.grad) this.grad = new Float64Array(this.rows * this.cols);
    return this.grad;
  }
}

function child(rows: number, cols: number, parents: Tensor[]): Tensor {
  const t = new Tensor(rows, cols);
  t.parents = parents;
  t.requiresGrad = parents.some((p) => p.requiresGrad);
  return t;
}

/** out = a @ b */
export function matmul(a: Tensor, b: Tensor): Tensor {
  if (a.cols !== b.rows) throw new Error(`matmul shape ${a.cols} vs ${b.rows}`);
  const out = child(a.rows, b.cols, [a, b]);
  const { rows: n, cols: k } = a;
  const m = b.cols;
  for (let i = 0; i < n; i++) {
    const ai = i * k;
    const oi = i * m;
    for (let p = 0; p < k; p++) {
      const av = a.data[ai + p];
      if (av === 0) continue;
      const bp = p * m;
      for (let j = 0; j < m; j++) out.data[oi + j] += av * b.data[bp + j];
    }
  }
  out.backwardFn = () => {
    const g = out.grad!;
    if (a.requiresGrad) {
      const ga = a.ensureGrad();
      for (let i = 0; i < n; i++) {
        for (let p = 0; p < k; p++) {
          let s = 0;
          const bp = p * m;
          const oi = i * m;
          for (let j = 0; j < m; j++) s += g[oi + j] * b.data[bp + j];
          ga[i * k + p] += s;
        }
      }
    }
    if (b.requiresGrad) {
      const gb = b.ensureGrad();
      for (let p = 0; p < k; p++) {
        for (let i = 0; i < n; i++) {
          const av = a.data[i * k + p];
          if (av === 0) continue;
          const oi = i * m;
          const bp = p * m;
          for (let j = 0; j < m; j++) gb[bp + j] += av * g[oi + j];
        }
      }
    }
  };
  return out;
}

/** out = a @ b^T */
export function matmulTransB(a: Tensor, b: Tensor): Tensor {
  if (a.cols !== b.cols) throw new Error(`matmulTransB shape ${a.cols} vs ${b.cols}`);
  const out = child(a.rows, b.rows, [a, b]);
  for (let i = 0; i < a.rows; i++) {
    for (let j = 0; j < b.rows; j++) {
      let s = 0;
      for (let p = 0; p < a.cols; p++) s += a.data[i * a.cols + p] * b.data[j * b.cols + p];
      out.data[i * b.rows + j] = s;
    }
  }
  out.backwardFn = () => {
    const g = out.grad!;
    if (a.requiresGrad) {
      const ga = a.ensureGrad();
      for (let i = 0; i < a.rows; i++) {
        for (let p = 0; p < a.cols; p++) {
          let s = 0;
          for (let j = 0; j < b.rows; j++) s += g[i * b.rows + j] * b.data[j * b.cols + p];
          ga[i * a.cols + p] += s;
        }
      }
    }
    if (b.requiresGrad) {
      const gb = b.ensureGrad();
      for (let j = 0; j < b.rows; j++) {
        for (let p = 0; p < b.cols; p++) {
          let s = 0;
          for (let i = 0; i < a.rows; i++) s += g[i * b.rows + j] * a.data[i * a.cols + p];
          gb[j * b.cols + p] += s;
        }
      }
    }
  };
  return out;
}

export function add(a: Tensor, b: Tensor): Tensor {
  if (a.rows !== b.rows || a.cols !== b.cols) throw new Error("add shape mismatch");
  const out = child(a.rows, a.cols, [a, b]);
  for (let i = 0; i < out.data.length; i++) out.data[i] = a.data[i] + b.data[i];
  out.backwardFn = () => {
    const g = out.grad!;
    if (a.requiresGrad) {
      const ga = a.ensureGrad();
      for (let i = 0; i < g.length; i++) ga[i] += g[i];
    }
    if (b.requiresGrad) {
      const gb = b.ensureGrad();
      for (let i = 0; i < g.length; i++) gb[i] += g[i];
    }
  };
  return out;
}

/** Broadcast a 1 x cols bias over every row. */
export function addBias(x: Tensor, bias: Tensor): Tensor {
  if (bias.rows !== 1 || bias.cols !== x.cols) throw new Error("bias shape mismatch");
  const out = child(x.rows, x.cols, [x, bias]);
  for (let i = 0; i < x.rows; i++) {
    for (let j = 0; j < x.cols; j++) {
      out.data[i * x.cols + j] = x.data[i * x.cols + j] + bias.data[j];
    }
  }
  out.backwardFn = () => {
    const g = out.grad!;
    if (x.requiresGrad) {
      const gx = x.ensureGrad();
      for (let i = 0; i < g.length; i++) gx[i] += g[i];
    }
    if (bias.requiresGrad) {
      const gb = bias.ensureGrad();
      for (let i = 0; i < x.rows; i++) {
        for (let j = 0; j < x.cols; j++) gb[j] += g[i * x.cols + j];
      }
    }
  };
  return out;
}

export function scale(x: Tensor, factor: number): Tensor {
  const out = child(x.rows, x.cols, [x]);
  for (let i = 0; i < x.data.length; i++) out.data[i] = x.data[i] * factor;
  out.backwardFn = () => {
    if (!x.requiresGrad) return;
    const gx = x.ensureGrad();
    const g = out.grad!;
    for (let i = 0; i < g.length; i++) gx[i] += g[i] * factor;
  };
  return out;
}

/** Per-row layer normalization with learned gain and bias (1 x cols each). */
export function layerNorm(x: Tensor, gain: Tensor, bias: Tensor): Tensor {
  const out = child(x.rows, x.cols, [x, gain, bias]);
  const d = x.cols;
  const eps = 1e-5;
  const means = new Float64Array(x.rows);
  const invStd = new Float64Array(x.rows);
  const normed = new Float64Array(x.rows * d);
  for (let i = 0; i < x.rows; i++) {
    let mean = 0;
    for (let j = 0; j < d; j++) mean += x.data[i * d + j];
    mean /= d;
    let variance = 0;
    for (let j = 0; j < d; j++) {
      const dev = x.data[i * d + j] - mean;
      variance += dev * dev;
    }
    variance /= d;
    const inv = 1 / Math.sqrt(variance + eps);
    means[i] = mean;
    invStd[i] = inv;
    for (let j = 0; j < d; j++) {
      const nv = (x.data[i * d + j] - mean) * inv;
      normed[i * d + j] = nv;
      out.data[i * d + j] = nv * gain.data[j] + bias.data[j];
    }
  }
  out.backwardFn = () => {
    const g = out.grad!;
    if (gain.requiresGrad) {
      const gg = gain.ensureGrad();
      for (let i = 0; i < x.rows; i++) {
        for (let j = 0; j < d; j++) gg[j] += g[i * d + j] * normed[i * d + j];
      }
    }
    if (bias.requiresGrad) {
      const gb = bias.ensureGrad();
      for (let i = 0; i < x.rows; i++) {
        for (let j = 0; j < d; j++) gb[j] += g[i * d + j];
      }
    }
    if (x.requiresGrad) {
      const gx = x.ensureGrad();
      for (let i = 0; i < x.rows; i++) {
        let sumDy = 0;
        let sumDyN = 0;
        for (let j = 0; j < d; j++) {
          const dy = g[i * d + j] * gain.data[j];
          sumDy += dy;
          sumDyN += dy * normed[i * d + j];
        }
        for (let j = 0; j < d; j++) {
          const dy = g[i * d + j] * gain.data[j];
          gx[i * d + j] +=
            invStd[i] * (dy - sumDy / d - (normed[i * d + j] * sumDyN) / d);
        }
      }
    }
  };
  return out;
}

export function gelu(x: Tensor): Tensor {
  const out = child(x.rows, x.cols, [x]);
  const c = Math.sqrt(2 / Math.PI);
  for (let i = 0; i < x.data.length; i++) {
    const v = x.data[i];
    out.data[i] = 0.5 * v * (1 + Math.tanh(c * (v + 0.044715 * v * v * v)));
  }
  out.backwardFn = () => {
    if (!x.requiresGrad) return;
    const gx = x.ensureGrad();
    const g = out.grad!;
    for (let i = 0; i < g.length; i++) {
      const v = x.data[i];
      const u = c * (v + 0.044715 * v * v * v);
      const t = Math.tanh(u);
      const du = c * (1 + 3 * 0.044715 * v * v);
      gx[i] += g[i] * (0.5 * (1 + t) + 0.5 * v * (1 - t * t) * du);
    }
  };
  return out;
}

export function sliceCols(x: Tensor, start: number, width: number): Tensor {
  const out = child(x.rows, width, [x]);
  for (let i = 0; i < x.rows; i++) {
    for (let j = 0; j < width; j++) {
      out.data[i * width + j] = x.data[i * x.cols + start + j];
    }
  }
  out.backwardFn = () => {
    if (!x.requiresGrad) return;
    const gx = x.ensureGrad();
    const g = out.grad!;
    for (let i = 0; i < x.rows; i++) {
      for (let j = 0; j < width; j++) gx[i * x.cols + start + j] += g[i * width + j];
    }
  };
  return out;
}

export function concatCols(parts: Tensor[]): Tensor {
  const rows = parts[0].rows;
  const cols = parts.reduce((s, p) => s + p.cols, 0);
  const out = child(rows, cols, parts);
  let offset = 0;
  for (const part of parts) {
    for (let i = 0; i < rows; i++) {
      for (let j = 0; j < part.cols; j++) {
        out.data[i * cols + offset + j] = part.data[i * part.cols + j];
      }
    }
    offset += part.cols;
  }
  out.backwardFn = () => {
    const g = out.grad!;
    let off = 0;
    for (const part of parts) {
      if (part.requiresGrad) {
        const gp = part.ensureGrad();
        for (let i = 0; i < rows; i++) {
          for (let j = 0; j < part.cols; j++) gp[i * part.cols + j] += g[i * cols + off + j];
        }
      }
      off += part.cols;
    }
  };
  return out;
}

/** Row-wise softmax over a causal lower-triangular mask (cols j <= row i). */
export function causalSoftmax(scores: Tensor): Tensor {
  const out = child(scores.rows, scores.cols, [scores]);
  const n = scores.cols;
  for (let i = 0; i < scores.rows; i++) {
    const limit = Math.min(i, n - 1);
    let max = -Infinity;
    for (let j = 0; j <= limit; j++) max = Math.max(max, scores.data[i * n + j]);
    let z = 0;
    for (let j = 0; j <= limit; j++) {
      const e = Math.exp(scores.data[i * n + j] - max);
      out.data[i * n + j] = e;
      z += e;
    }
    for (let j = 0; j <= limit; j++) out.data[i * n + j] /= z;
  }
  out.backwardFn = () => {
    if (!scores.requiresGrad) return;
    const gs = scores.ensureGrad();
    const g = out.grad!;
    for (let i = 0; i < scores.rows; i++) {
      const limit = Math.min(i, n - 1);
      let dot = 0;
      for (let j = 0; j <= limit; j++) dot += g[i * n + j] * out.data[i * n + j];
      for (let j = 0; j <= limit; j++) {
        gs[i * n + j] += out.data[i * n + j] * (g[i * n + j] - dot);
      }
    }
  };
  return out;
}

/** Embedding lookup: rows of `table` selected by `ids`. */
export function gatherRows(table: Tensor, ids: Int32Array): Tensor {
  const out = child(ids.length, table.cols, [table]);
  for (let i = 0; i < ids.length; i++) {
    const r = ids[i] * table.cols;
    for (let j = 0; j < table.cols; j++) out.data[i * table.cols + j] = table.data[r + j];
  }
  out.backwardFn = () => {
    if (!table.requiresGrad) return;
    const gt = table.ensureGrad();
    const g = out.grad!;
    for (let i = 0; i < ids.length; i++) {
      const r = ids[i] * table.cols;
      for (let j = 0; j < table.cols; j++) gt[r + j] += g[i * table.cols + j];
    }
  };
  return out;
}

/** Inverted dropout; identity when rate is 0. */
export function dropout(x: Tensor, rate: number, rand: () => number): Tensor {
  if (rate <= 0) return x;
  const out = child(x.rows, x.cols, [x]);
  const keep = 1 - rate;
  const mask = new Float64Array(x.data.length);
  for (let i = 0; i < x.data.length; i++) {
    mask[i] = rand() < rate ? 0 : 1 / keep;
    out.data[i] = x.data[i] * mask[i];
  }
  out.backwardFn = () => {
    if (!x.requiresGrad) return;
    const gx = x.ensureGrad();
    const g = out.grad!;
    for (let i = 0; i < g.length; i++) gx[i] += g[i] * mask[i];
  };
  return out;
}

/**
 * Mean softmax cross-entropy of each row's distribution against the target
 * ids; returns a 1x1 tensor.
 */
export function softmaxCrossEntropy(logits: Tensor, targets: Int32Array): Tensor {
  const out = child(1, 1, [logits]);
  const n = logits.rows;
  const v = logits.cols;
  const probs = new Float64Array(n * v);
  let total = 0;
  for (let i = 0; i < n; i++) {
    let max = -Infinity;
    for (let j = 0; j < v; j++) max = Math.max(max, logits.data[i * v + j]);
    let z = 0;
    for (let j = 0; j < v; j++) {
      const e = Math.exp(logits.data[i * v + j] - max);
      probs[i * v + j] = e;
      z += e;
    }
    for (let j = 0; j < v; j++) probs[i * v + j] /= z;
    total += -Math.log(probs[i * v + targets[i]] + 1e-30);
  }
  out.data[0] = total / n;
  out.backwardFn = () => {
    if (!logits.requiresGrad) return;
    const gl = logits.ensureGrad();
    const g = out.grad![0] / n;
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < v; j++) {
        gl[i * v + j] += g * (probs[i * v + j] - (j === targets[i] ? 1 : 0));
      }
    }
  };
  return out;
}

/** Reverse-topological backward pass from a scalar loss. */
export function backward(loss: Tensor): void {
  const order: Tensor[] = [];
  const seen = new Set<Tensor>();
  const visit = (t: Tensor) => {
    if (seen.has(t)) return;
    seen.add(t);
    for (const p of t.parents) visit(p);
    order.push(t);
  };
  visit(loss);
  loss.ensureGrad()[0] = 1;
  for (let i = order.length - 1; i >= 0; i--) {
    const t = order[i];
    if (t.backwardFn && t.grad) t.backwardFn();
  }
}
