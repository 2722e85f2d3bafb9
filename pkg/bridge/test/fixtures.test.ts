/** Bridge conformance against the shared golden wire fixtures.
 *
 * The same fixture set drives the primary toolkit's mock-server contract
 * tests; here a stubbed provider supplies each fixture's scripted reply and
 * the bridge must produce the identical wire response (or the documented
 * error for out-of-range replies).
 */

import { readdirSync, readFileSync } from "node:fs";
import type { Server } from "node:http";
import path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { createApp } from "../src/server";
import { ENDPOINTS } from "../src/schema";
import type { Provider, ProviderRequest } from "../src/provider";

const FIXTURES_DIR = path.resolve(__dirname, "..", "..", "share", "wire", "fixtures");
const SCHEMA_PATH = path.resolve(__dirname, "..", "..", "share", "wire", "schema.json");

interface Fixture {
  name: string;
  endpoint: string;
  request: Record<string, unknown>;
  response?: Record<string, unknown>;
  provider_reply?: string;
  bridge_provider_reply?: string;
  bridge_error_status?: number;
  bridge_error_contains?: string;
}

function loadFixtures(): Fixture[] {
  return readdirSync(FIXTURES_DIR)
    .filter((f) => f.endsWith(".json"))
    .sort()
    .map((f) => JSON.parse(readFileSync(path.join(FIXTURES_DIR, f), "utf-8")));
}

class StubProvider implements Provider {
  reply = "";
  lastRequest: ProviderRequest | null = null;

  async complete(req: ProviderRequest): Promise<string> {
    this.lastRequest = req;
    return this.reply;
  }
}

const stub = new StubProvider();
let server: Server;
let base: string;

beforeAll(async () => {
  const app = createApp({ provider: stub });
  await new Promise<void>((resolve) => {
    server = app.listen(0, "127.0.0.1", resolve);
  });
  const address = server.address();
  if (address === null || typeof address === "string") throw new Error("no port");
  base = `http://127.0.0.1:${address.port}`;
});

afterAll(() => {
  server.close();
});

async function post(endpoint: string, body: unknown) {
  const resp = await fetch(`${base}/v1/${endpoint}`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  return { status: resp.status, body: (await resp.json()) as Record<string, unknown> };
}

describe("wire schema", () => {
  it("implements exactly the endpoints in the shared schema file", () => {
    const schema = JSON.parse(readFileSync(SCHEMA_PATH, "utf-8"));
    const want = Object.keys(schema.endpoints).sort();
    expect([...ENDPOINTS].sort()).toEqual(want);
  });
});

describe("golden fixtures", () => {
  const fixtures = loadFixtures();
  const valid = fixtures.filter((f) => f.response !== undefined);
  const invalid = fixtures.filter((f) => f.bridge_error_status !== undefined);

  it("covers both directions", () => {
    expect(valid.length).toBeGreaterThanOrEqual(8);
    expect(invalid.length).toBeGreaterThanOrEqual(4);
  });

  for (const fixture of loadFixtures()) {
    if (fixture.response !== undefined) {
      it(`matches ${fixture.name}`, async () => {
        stub.reply = fixture.provider_reply ?? "";
        const { status, body } = await post(fixture.endpoint, fixture.request);
        expect(status).toBe(200);
        expect(body).toEqual(fixture.response);
      });
    } else {
      it(`rejects ${fixture.name}`, async () => {
        stub.reply = fixture.bridge_provider_reply ?? "";
        const { status, body } = await post(fixture.endpoint, fixture.request);
        expect(status).toBe(fixture.bridge_error_status);
        const err = body.error as { message: string };
        expect(err.message).toContain(fixture.bridge_error_contains);
      });
    }
  }
});

describe("request validation and health", () => {
  it("rejects malformed bodies with 400", async () => {
    const { status, body } = await post("grade", { question: "q" });
    expect(status).toBe(400);
    expect(body).toHaveProperty("error");
  });

  it("rejects unknown endpoints with 404", async () => {
    const { status } = await post("nope", {});
    expect(status).toBe(404);
  });

  it("serves health", async () => {
    const resp = await fetch(`${base}/health`);
    expect(resp.status).toBe(200);
    expect(await resp.json()).toEqual({ status: "ok" });
  });

  it("uses the grading template for grade calls", async () => {
    stub.reply = "1, 5";
    await post("grade", {
      question: "What color?", gold: "red", answer: "red",
      image_ref: "sim://x",
    });
    expect(stub.lastRequest?.prompt).toContain("exactly two fractions");
    expect(stub.lastRequest?.prompt).toContain("Question: What color?");
    expect(stub.lastRequest?.prompt).toContain("Response: red");
  });
});
