// Entry point: mount against the real service, or the in-memory mock
// when the page is opened with ?mock=1 (component demos, no backend).

import { ApiClient } from './api.js';
import { MockService } from './mock.js';
import { mount } from './app.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app element');

const params = new URLSearchParams(window.location.search);
const service = params.get('mock')
  ? new MockService()
  : new ApiClient(params.get('base') ?? '', params.get('token'));

mount(root, service);
