import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

const here = dirname(fileURLToPath(import.meta.url));

/** Load a wire payload captured from the real service. */
export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, 'fixtures', name), 'utf-8')) as T;
}

export interface RecordedRequest {
  method: string;
  path: string;
  headers: Record<string, string>;
  body: unknown;
}

export type Route = {
  method: string;
  path: string | RegExp;
  status?: number;
  reply: unknown | ((request: RecordedRequest) => unknown);
};

/** Minimal fetch stub: route table in, recorded requests out. */
export function makeFakeFetch(routes: Route[]) {
  const requests: RecordedRequest[] = [];
  const fetchImpl = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = new URL(String(input));
    const method = init?.method ?? 'GET';
    const recorded: RecordedRequest = {
      method,
      path: url.pathname,
      headers: Object.fromEntries(
        Object.entries((init?.headers as Record<string, string>) ?? {}),
      ),
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    };
    requests.push(recorded);
    for (const route of routes) {
      const matches =
        route.method === method &&
        (typeof route.path === 'string'
          ? route.path === url.pathname
          : route.path.test(url.pathname));
      if (matches) {
        const payload =
          typeof route.reply === 'function'
            ? (route.reply as (r: RecordedRequest) => unknown)(recorded)
            : route.reply;
        return new Response(JSON.stringify(payload), {
          status: route.status ?? 200,
          headers: { 'content-type': 'application/json' },
        });
      }
    }
    return new Response(JSON.stringify({ error: 'UNKNOWN_ROUTE' }), { status: 404 });
  }) as typeof fetch;
  return { fetchImpl, requests };
}
