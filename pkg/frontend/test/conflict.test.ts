import { describe, expect, it } from 'vitest';

import { MockService } from '../src/mock.js';
import { WizardStore } from '../src/store.js';
import { render } from '../src/views.js';

const INTENT = 'A medical chatbot that triages patients.';

describe('optimistic concurrency from the client side', () => {
  it('a stale confirm surfaces as a reload prompt, and reload recovers', async () => {
    const service = new MockService();
    const store = new WizardStore(service);
    await store.submitIntent(INTENT);
    const id = store.get().assessment!.id;

    // a second session confirms first, bumping the version server-side
    await service.confirm(id, { expected_version: 1, tasks: ['Generation'] });

    await store.confirm();
    const state = store.get();
    expect(state.conflict).toBe(true);
    const html = render(state);
    expect(html).toContain('version conflict');
    expect(html).toContain('data-action="reload"');

    await store.reload();
    expect(store.get().conflict).toBe(false);
    expect(store.get().assessment?.status).toBe('tasks_confirmed');
    expect(store.get().assessment?.version).toBe(2);
  });

  it('non-conflict service errors do not trigger the reload prompt', async () => {
    const service = new MockService();
    const store = new WizardStore(service);
    await store.submitIntent(INTENT);
    // asking for recommendations before confirm is a state error (409),
    // but not a version conflict: it must render as an error, not a reload
    await store.loadRecommendations();
    const state = store.get();
    expect(state.conflict).toBe(false);
    expect(state.error?.status).toBe(409);
  });
});
