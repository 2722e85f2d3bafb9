/** Strict parsers for provider replies. Out-of-range scores are rejected,
 * never clamped; a lenient gateway would mask provider drift. */

export class ReplyError extends Error {}

const NUMBER = /^-?\d+(?:\.\d+)?$/;

function splitNumbers(reply: string, what: string): number[] {
  const parts = reply.trim().split(",").map((p) => p.trim());
  if (parts.some((p) => !NUMBER.test(p))) {
    throw new ReplyError(`malformed ${what} output: ${JSON.stringify(reply)}`);
  }
  return parts.map(Number);
}

/** Grade replies carry exactly two fractions in (delta, sigma) order. */
export function parseGrade(reply: string): { sigma: number; delta: number } {
  const nums = splitNumbers(reply, "grader");
  if (nums.length !== 2) {
    throw new ReplyError(`malformed grader output: ${JSON.stringify(reply)}`);
  }
  const [delta, sigma] = nums;
  if (![0, 0.5, 1].includes(delta)) {
    throw new ReplyError(`delta out of range: ${delta}`);
  }
  if (!Number.isInteger(sigma) || sigma < 1 || sigma > 5) {
    throw new ReplyError(`sigma out of range: ${sigma}`);
  }
  return { sigma, delta };
}

export function parseStop(reply: string): boolean {
  const word = reply.trim().toLowerCase().replace(/["'.]+$/, "").replace(/^["']+/, "");
  if (word === "yes") return true;
  if (word === "no") return false;
  throw new ReplyError(`malformed stop reply: ${JSON.stringify(reply)}`);
}

/** Semantic replies: global score first, then one local score per sample point. */
export function parseSemantic(
  reply: string,
  nSamples: number,
): { v_l: number[]; v_g: number } {
  const nums = splitNumbers(reply, "semantic");
  if (nums.length !== nSamples + 1) {
    throw new ReplyError(
      `malformed semantic output: expected ${nSamples + 1} values, got ${nums.length}`,
    );
  }
  const [v_g, ...v_l] = nums;
  if (v_g < 0 || v_g > 1) throw new ReplyError(`v_g out of range: ${v_g}`);
  for (const v of v_l) {
    if (v < 0 || v > 1) throw new ReplyError(`v_l out of range: ${v}`);
  }
  return { v_l, v_g };
}

/** Region replies: "type, confidence, x, y". */
export function parseClassify(reply: string): {
  region_type: string;
  confidence: number;
  rep_point: { x: number; y: number };
} {
  const parts = reply.trim().split(",").map((p) => p.trim());
  if (parts.length !== 4) {
    throw new ReplyError(`malformed region output: ${JSON.stringify(reply)}`);
  }
  const [rtype, confText, xText, yText] = parts;
  if (!rtype) throw new ReplyError("malformed region output: empty region type");
  if (!NUMBER.test(confText) || !NUMBER.test(xText) || !NUMBER.test(yText)) {
    throw new ReplyError(`malformed region output: ${JSON.stringify(reply)}`);
  }
  const confidence = Number(confText);
  const x = Number(xText);
  const y = Number(yText);
  if (confidence < 0 || confidence > 1) {
    throw new ReplyError(`confidence out of range: ${confidence}`);
  }
  if (!Number.isInteger(x) || !Number.isInteger(y)) {
    throw new ReplyError(`malformed region output: non-integer rep point`);
  }
  return { region_type: rtype, confidence, rep_point: { x, y } };
}
