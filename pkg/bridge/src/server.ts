/** The oracle wire-protocol gateway: five endpoints, provider-backed. */

import express, { type Express, type Request, type Response } from "express";

import { parseClassify, parseGrade, parseSemantic, parseStop, ReplyError } from "./parse";
import { loadPromptAssets, renderPrompt, type PromptAssets } from "./prompts";
import { ProviderTimeoutError, type Provider } from "./provider";
import { ENDPOINTS, errorBody, requestSchemas, type Endpoint } from "./schema";

/** Built-in instructions for the two score endpoints (gateway plumbing, not
 * part of the shipped prompt assets). Replies must be machine-parseable. */
const SEMANTIC_INSTRUCTION =
  "You are assisting a robot exploring an indoor scene to answer a question.\n" +
  "Rate how promising the observed scene and each marked sample point are for\n" +
  "answering the question, each as a fraction between 0 and 1.\n" +
  "Question: {question}\n" +
  "There are {n} sample points, listed as (x, y) grid cells: {points}.\n" +
  "Reply with exactly {count} comma-separated numbers and nothing else:\n" +
  "first the overall scene score, then one score per sample point in order.";

const CLASSIFY_INSTRUCTION =
  "You are assisting a robot exploring an indoor scene.\n" +
  "Classify the functional region visible in the image (for example kitchen,\n" +
  "bathroom, bedroom, living room, hallway) and pick the sample point that\n" +
  "best represents it.\n" +
  "Question under investigation: {question}\n" +
  "Reply with exactly: <region type>, <confidence between 0 and 1>, <x>, <y>\n" +
  "and nothing else.";

function fill(template: string, values: Record<string, string>): string {
  return template.replace(/\{(\w+)\}/g, (whole, key) => values[key] ?? whole);
}

export interface BridgeOptions {
  provider: Provider;
  prompts?: PromptAssets;
}

export function createApp(options: BridgeOptions): Express {
  const prompts = options.prompts ?? loadPromptAssets();
  const provider = options.provider;
  const app = express();
  app.use(express.json({ limit: "10mb" }));

  app.get("/health", (_req, res) => {
    res.json({ status: "ok" });
  });

  for (const endpoint of ENDPOINTS) {
    app.post(`/v1/${endpoint}`, (req, res) => {
      void handle(endpoint, req, res);
    });
  }

  async function handle(endpoint: Endpoint, req: Request, res: Response) {
    const parsed = requestSchemas[endpoint].safeParse(req.body);
    if (!parsed.success) {
      const issue = parsed.error.issues[0];
      res.status(400).json(errorBody(
        "bad_request",
        `${endpoint}: ${issue.path.join(".") || "body"}: ${issue.message}`,
      ));
      return;
    }
    const body = parsed.data as Record<string, unknown>;
    let prompt: string;
    switch (endpoint) {
      case "grade":
        prompt = renderPrompt(prompts.grading, {
          question: body.question as string,
          gold: body.gold as string,
          answer: body.answer as string,
        });
        break;
      case "should_stop":
        prompt = renderPrompt(prompts.stop, { question: body.question as string });
        break;
      case "answer":
        prompt = renderPrompt(prompts.answer, { question: body.question as string });
        break;
      case "semantic_scores": {
        const points = body.sample_points as Array<{ x: number; y: number }>;
        prompt = fill(SEMANTIC_INSTRUCTION, {
          question: body.question as string,
          n: String(points.length),
          points: points.map((p) => `(${p.x}, ${p.y})`).join(", ") || "(none)",
          count: String(points.length + 1),
        });
        break;
      }
      case "classify_region":
        prompt = fill(CLASSIFY_INSTRUCTION, { question: body.question as string });
        break;
    }

    let reply: string;
    try {
      reply = await provider.complete({
        prompt,
        imageRef: body.image_ref as string,
      });
    } catch (err) {
      if (err instanceof ProviderTimeoutError) {
        res.status(504).json(errorBody("provider_timeout", err.message));
      } else {
        res.status(502).json(errorBody("provider_error", String(err)));
      }
      return;
    }

    try {
      switch (endpoint) {
        case "grade":
          res.json(parseGrade(reply));
          return;
        case "should_stop":
          res.json({ stop: parseStop(reply) });
          return;
        case "answer":
          res.json({ answer: reply.trim() });
          return;
        case "semantic_scores": {
          const points = body.sample_points as unknown[];
          res.json(parseSemantic(reply, points.length));
          return;
        }
        case "classify_region":
          res.json(parseClassify(reply));
          return;
      }
    } catch (err) {
      if (err instanceof ReplyError) {
        res.status(502).json(errorBody("malformed_model_reply", err.message));
        return;
      }
      throw err;
    }
  }

  app.use((req, res) => {
    res.status(404).json(errorBody("not_found", `unknown path ${req.path}`));
  });

  return app;
}
