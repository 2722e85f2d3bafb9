/** Model provider abstraction: one completion call per oracle judgment.
 *
 * The HTTP implementation speaks the common chat-completions shape; tests use
 * a stub. Provider concurrency is bounded by a simple semaphore so a burst of
 * parallel episodes cannot stampede the upstream API.
 */

export interface ProviderRequest {
  prompt: string;
  imageRef: string;
}

export interface Provider {
  complete(req: ProviderRequest): Promise<string>;
}

export class ProviderTimeoutError extends Error {}

export interface ProviderConfig {
  url: string;
  model: string;
  token?: string;
  timeoutMs: number;
  maxConcurrency: number;
}

export function configFromEnv(env: NodeJS.ProcessEnv = process.env): ProviderConfig {
  const url = env.PROVIDER_URL;
  const model = env.PROVIDER_MODEL;
  if (!url || !model) {
    throw new Error("PROVIDER_URL and PROVIDER_MODEL must be set");
  }
  return {
    url,
    model,
    token: env.PROVIDER_TOKEN,
    timeoutMs: Number(env.PROVIDER_TIMEOUT_MS ?? 30000),
    maxConcurrency: Number(env.BRIDGE_MAX_CONCURRENCY ?? 4),
  };
}

class Semaphore {
  private queue: Array<() => void> = [];
  private active = 0;

  constructor(private readonly limit: number) {}

  async acquire(): Promise<() => void> {
    if (this.active < this.limit) {
      this.active += 1;
      return () => this.release();
    }
    await new Promise<void>((resolve) => this.queue.push(resolve));
    this.active += 1;
    return () => this.release();
  }

  private release(): void {
    this.active -= 1;
    const next = this.queue.shift();
    if (next) next();
  }
}

/** image_ref transport: data URIs and URLs ride as image content; anything
 * else is passed through as an opaque reference line so offline contract
 * tests (and providers with side-channel image stores) keep working. */
export function imageContent(imageRef: string):
  | { kind: "url"; url: string }
  | { kind: "opaque"; ref: string } {
  if (/^(data:|https?:\/\/)/.test(imageRef)) {
    return { kind: "url", url: imageRef };
  }
  return { kind: "opaque", ref: imageRef };
}

export class HttpProvider implements Provider {
  private readonly semaphore: Semaphore;

  constructor(private readonly config: ProviderConfig) {
    this.semaphore = new Semaphore(config.maxConcurrency);
  }

  async complete(req: ProviderRequest): Promise<string> {
    const release = await this.semaphore.acquire();
    try {
      return await this.post(req);
    } finally {
      release();
    }
  }

  private async post(req: ProviderRequest): Promise<string> {
    const image = imageContent(req.imageRef);
    const content: unknown[] = [{ type: "text", text: req.prompt }];
    if (image.kind === "url") {
      content.push({ type: "image_url", image_url: { url: image.url } });
    } else {
      content.push({ type: "text", text: `[image: ${image.ref}]` });
    }
    const controller = new AbortController();
    const timer = setTimeout(() => controller.abort(), this.config.timeoutMs);
    try {
      const headers: Record<string, string> = {
        "Content-Type": "application/json",
      };
      if (this.config.token) headers.Authorization = `Bearer ${this.config.token}`;
      const resp = await fetch(this.config.url, {
        method: "POST",
        headers,
        body: JSON.stringify({
          model: this.config.model,
          messages: [{ role: "user", content }],
        }),
        signal: controller.signal,
      });
      if (!resp.ok) {
        throw new Error(`provider returned status ${resp.status}`);
      }
      const body = (await resp.json()) as {
        choices?: Array<{ message?: { content?: string } }>;
      };
      const text = body.choices?.[0]?.message?.content;
      if (typeof text !== "string") {
        throw new Error("provider response missing message content");
      }
      return text;
    } catch (err) {
      if ((err as Error).name === "AbortError") {
        throw new ProviderTimeoutError(
          `provider timed out after ${this.config.timeoutMs} ms`,
        );
      }
      throw err;
    } finally {
      clearTimeout(timer);
    }
  }
}
