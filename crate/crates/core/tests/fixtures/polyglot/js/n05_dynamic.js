const mod = await import('node-fetch');
import('./local.js');
